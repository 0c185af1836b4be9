#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "core/errors.hpp"
#include "core/fom.hpp"
#include "oracle_helpers.hpp"

using namespace hmor;

namespace {

MaterialParams nominal() { return MaterialParams{}; }

struct Problem {
  ScenarioSpec spec;
  Mesh mesh;
  FieldLayout layout;
  AffineOperators ops;
  MaterialParams params;
};

Problem make_square(int nh, MaterialParams params = nominal()) {
  Problem p{ScenarioSpec::square(nh), {}, {}, {}, params};
  p.mesh = build_mesh(p.spec);
  p.layout = build_layout(p.mesh, p.spec);
  p.ops = assemble_affine(p.mesh, p.layout, p.params);
  return p;
}

}  // namespace

TEST_CASE("normalization of dimensional inputs") {
  DimensionalParams dim;
  const NormalizationResult n = normalize(dim);
  CHECK(n.chem_factor == doctest::Approx(4040.40404).epsilon(1e-6));
  CHECK(n.lambda == doctest::Approx(1600.0).epsilon(1e-12));
  // T = 0.25 corresponds to l^2/D * 0.25 seconds
  CHECK(0.25 * n.seconds_per_time_unit == doctest::Approx(35156.25).epsilon(1e-9));

  DimensionalParams equal = dim;
  equal.lame_drained_pa = equal.shear_modulus_pa;
  CHECK(normalize(equal).lambda == doctest::Approx(1.0).epsilon(1e-15));

  DimensionalParams bad = dim;
  bad.shear_modulus_pa = 0.0;
  CHECK_THROWS_AS(normalize(bad), ConfigError);
}

TEST_CASE("material params validation") {
  MaterialParams p;
  p.lambda = -1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = MaterialParams{};
  p.alpha_robin = -0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("shear block null space on one element is the rigid motions") {
  const Mesh mesh = testing::unit_triangle_mesh();
  const FieldLayout layout = build_layout_free(mesh);
  const AffineOperators ops = assemble_affine(mesh, layout, nominal());

  Eigen::MatrixXd a1 = Eigen::MatrixXd(ops.shear_stiffness);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a1);
  int zero_modes = 0;
  for (int i = 0; i < a1.rows(); ++i)
    if (std::abs(es.eigenvalues()[i]) < 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff())
      ++zero_modes;
  CHECK(zero_modes == 3);  // two translations + one rotation
}

TEST_CASE("element matrices match the symbolic integration oracle") {
  const Mesh mesh = testing::unit_triangle_mesh();
  const FieldLayout layout = build_layout_free(mesh);
  const AffineOperators ops = assemble_affine(mesh, layout, nominal());

  const auto shapes = testing::p2_shape_polys();
  // map local dof (node, component) to the global interleaved dof
  auto gdof = [&](int node, int comp) { return layout.u_dof(layout.tri_p2_nodes[0][node], comp); };

  const Eigen::MatrixXd a2 = Eigen::MatrixXd(ops.volumetric_stiffness);
  const Eigen::MatrixXd a1 = Eigen::MatrixXd(ops.shear_stiffness);
  for (int na = 0; na < 6; ++na) {
    const testing::Poly2 nax = testing::ddx(shapes[na]);
    const testing::Poly2 nay = testing::ddy(shapes[na]);
    for (int nb = 0; nb < 6; ++nb) {
      const testing::Poly2 nbx = testing::ddx(shapes[nb]);
      const testing::Poly2 nby = testing::ddy(shapes[nb]);
      // div(phi) for x-dofs is d/dx, for y-dofs d/dy
      const double oracle_xx = (nax * nbx).integrate_unit_triangle();
      const double oracle_xy = (nax * nby).integrate_unit_triangle();
      const double oracle_yy = (nay * nby).integrate_unit_triangle();
      CHECK(a2(gdof(na, 0), gdof(nb, 0)) == doctest::Approx(oracle_xx).epsilon(1e-12));
      CHECK(a2(gdof(na, 0), gdof(nb, 1)) == doctest::Approx(oracle_xy).epsilon(1e-12));
      CHECK(a2(gdof(na, 1), gdof(nb, 1)) == doctest::Approx(oracle_yy).epsilon(1e-12));

      // eps(phi_a) : eps(phi_b) expanded in components
      const double sxx = (nax * nbx).integrate_unit_triangle();
      const double half_xy = ((nay * nby).scaled(0.5)).integrate_unit_triangle();
      CHECK(a1(gdof(na, 0), gdof(nb, 0)) ==
            doctest::Approx(sxx + half_xy).epsilon(1e-12));
      const double cross = ((nay * nbx).scaled(0.5)).integrate_unit_triangle();
      CHECK(a1(gdof(na, 0), gdof(nb, 1)) == doctest::Approx(cross).epsilon(1e-12));
    }
  }

  // pressure-coupling column sums: with the linear field at one, the block
  // row equals minus the integral of div(phi)
  const Eigen::MatrixXd a3 = Eigen::MatrixXd(ops.pressure_coupling);
  for (int na = 0; na < 6; ++na) {
    const double div_int = testing::ddx(shapes[na]).integrate_unit_triangle();
    CHECK(a3.row(gdof(na, 0)).sum() == doctest::Approx(-div_int).epsilon(1e-12));
    CHECK(ops.pressure_shift[gdof(na, 0)] == doctest::Approx(-div_int).epsilon(1e-12));
  }
}

TEST_CASE("assembled blocks: symmetry and coupling transpose identity") {
  const Problem p = make_square(50);
  const auto sym_err = [](const SpMat& m) {
    return (Eigen::MatrixXd(m) - Eigen::MatrixXd(m).transpose()).cwiseAbs().maxCoeff();
  };
  CHECK(sym_err(p.ops.diffusion_stiffness) < 1e-12);
  CHECK(sym_err(p.ops.robin_mass) < 1e-12);

  // the big displacement blocks: compare sparse structures without densifying
  const SpMat a1t = SpMat(p.ops.shear_stiffness.transpose());
  CHECK((p.ops.shear_stiffness - a1t).norm() < 1e-12);
  const SpMat a2t = SpMat(p.ops.volumetric_stiffness.transpose());
  CHECK((p.ops.volumetric_stiffness - a2t).norm() < 1e-12);

  // rate-of-dilation block is the negative transpose of the pressure coupling
  const SpMat neg = SpMat(p.ops.pressure_coupling.transpose()) + p.ops.dilation_coupling;
  CHECK(neg.norm() < 1e-12);
}

TEST_CASE("equilibrium start is a fixed point when ambient equals initial") {
  MaterialParams params = nominal();
  params.mu_ambient = params.mu_initial;
  const Problem p = make_square(6, params);

  FomSolver solver(p.mesh, p.layout, p.ops, p.params, 0.25 / 20);
  Trajectory traj = solver.solve(20);
  for (const auto& s : traj.states) {
    CHECK(s.u.cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.mu.array() - params.mu_initial).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("benchmark relaxation toward the ambient potential") {
  const Problem p = make_square(16);
  FomSolver solver(p.mesh, p.layout, p.ops, p.params, 0.25 / 60);
  const Trajectory traj = solver.solve(60);

  CHECK(traj.states.front().mu.isApproxToConstant(p.params.mu_initial, 1e-14));
  CHECK(traj.states.front().u.cwiseAbs().maxCoeff() < 1e-10);

  // consistent-mass undershoot near the initial layer stays tiny; monotone
  // up to that scale
  const double range = std::abs(p.params.mu_ambient - p.params.mu_initial);
  double prev_min = -1e30;
  for (const auto& s : traj.states) {
    const double mn = s.mu.minCoeff();
    CHECK(mn >= prev_min - 5e-4 * range);
    prev_min = mn;
    CHECK(s.mu.maxCoeff() < 1e-9);  // never overshoots the ambient value 0
  }
  // every node relaxes upward over the whole horizon
  const Eigen::VectorXd rise = traj.states.back().mu - traj.states.front().mu;
  CHECK(rise.minCoeff() > 0.0);

  // momentum residual after each step, on the unconstrained rows
  std::vector<char> constrained(p.layout.n_u, 0);
  for (const auto& bc : p.layout.dirichlet)
    if (bc.dof < p.layout.n_u) constrained[bc.dof] = 1;
  for (const auto& s : traj.states) {
    const Eigen::VectorXd rhs =
        p.ops.body_load + p.params.chem_factor * p.params.mu_initial * p.ops.pressure_shift;
    Eigen::VectorXd res = 2.0 * (p.ops.shear_stiffness * s.u) +
                          p.params.lambda * (p.ops.volumetric_stiffness * s.u) +
                          p.params.chem_factor * (p.ops.pressure_coupling * s.mu) - rhs;
    for (int i = 0; i < p.layout.n_u; ++i)
      if (constrained[i]) res[i] = 0.0;
    const double scale = std::max(rhs.cwiseAbs().maxCoeff(), 1.0);
    CHECK(res.cwiseAbs().maxCoeff() < 1e-9 * scale);
  }
}

TEST_CASE("highest displacement at the fully exposed corner") {
  const Problem p = make_square(12);
  const Trajectory traj = solve_fom(p.mesh, p.layout, p.ops, p.params, 40, 0.25);
  const FomState& last = traj.states.back();

  double best = -1.0;
  Vec2 where{0, 0};
  for (int n = 0; n < static_cast<int>(p.layout.p2_nodes.size()); ++n) {
    const double mag = std::hypot(last.u[p.layout.u_dof(n, 0)], last.u[p.layout.u_dof(n, 1)]);
    if (mag > best) {
      best = mag;
      where = p.layout.p2_nodes[n];
    }
  }
  CHECK(where.x == doctest::Approx(1.0));
  CHECK(where.y == doctest::Approx(1.0));
}

TEST_CASE("zero-step trajectory is just the initial state") {
  const Problem p = make_square(4);
  const Trajectory traj = solve_fom(p.mesh, p.layout, p.ops, p.params, 0, 0.25);
  CHECK(traj.states.size() == 1);
  CHECK(traj.states[0].time == 0.0);
}

TEST_CASE("first-order accuracy in time via step-halving") {
  const Problem p = make_square(8);
  auto final_state = [&](int n_t) {
    return solve_fom(p.mesh, p.layout, p.ops, p.params, n_t, 0.25).states.back();
  };
  const FomState ref = final_state(160);
  const FomState coarse = final_state(40);
  const FomState fine = final_state(80);

  const double e_coarse = (coarse.mu - ref.mu).norm();
  const double e_fine = (fine.mu - ref.mu).norm();
  // halving the step should roughly halve the error
  CHECK(e_coarse / e_fine == doctest::Approx(2.0).epsilon(0.35));

  const double eu_coarse = (coarse.u - ref.u).norm();
  const double eu_fine = (fine.u - ref.u).norm();
  CHECK(eu_coarse / eu_fine == doctest::Approx(2.0).epsilon(0.35));
}

TEST_CASE("stress field: reference state, isotropic shift, transient signs") {
  const Problem p = make_square(8);

  FomState zero;
  zero.u = Eigen::VectorXd::Zero(p.layout.n_u);
  zero.mu = Eigen::VectorXd::Constant(p.layout.n_mu, p.params.mu_initial);
  for (const auto& s : stress_field(p.mesh, p.layout, zero, p.params)) {
    CHECK(std::abs(s.xx) < 1e-11);  // A * mu0 * (rounding of the unit partition)
    CHECK(std::abs(s.yy) < 1e-11);
    CHECK(s.xy == 0.0);
  }

  FomState shifted = zero;
  const double c = 0.17;
  shifted.mu.array() += c;
  for (const auto& s : stress_field(p.mesh, p.layout, shifted, p.params)) {
    CHECK(s.xx == doctest::Approx(-p.params.chem_factor * c).epsilon(1e-12));
    CHECK(s.yy == doctest::Approx(-p.params.chem_factor * c).epsilon(1e-12));
    CHECK(s.xy == 0.0);
    CHECK(s.xy == s.xy);  // symmetric by construction (single stored value)
  }

  const Trajectory traj = solve_fom(p.mesh, p.layout, p.ops, p.params, 40, 0.25);
  const auto mid = stress_field(p.mesh, p.layout, traj.states[10], p.params);
  double mn = 1e30, mx = -1e30;
  for (const auto& s : mid) {
    mn = std::min(mn, s.xx);
    mx = std::max(mx, s.xx);
  }
  CHECK(mn < 0.0);
  CHECK(mx > 0.0);
}

TEST_CASE("probe: vertex hit, linear reproduction, midpoint dof") {
  const Problem p = make_square(4);

  FomState s;
  s.u = Eigen::VectorXd::Zero(p.layout.n_u);
  s.mu = Eigen::VectorXd::Zero(p.layout.n_mu);
  // linear scalar field and quadratic displacement filled from coordinates
  for (int v = 0; v < static_cast<int>(p.mesh.vertices.size()); ++v) {
    const Vec2 q = p.mesh.vertices[v];
    s.mu[p.layout.mu_dof_of_vertex[v]] = 0.3 + 1.7 * q.x - 0.9 * q.y;
  }
  for (int n = 0; n < static_cast<int>(p.layout.p2_nodes.size()); ++n) {
    const Vec2 q = p.layout.p2_nodes[n];
    s.u[p.layout.u_dof(n, 0)] = q.x * q.x + 0.5 * q.y;
    s.u[p.layout.u_dof(n, 1)] = q.x * q.y;
  }

  const auto at_vertex = probe(p.mesh, p.layout, s, {{0.5, 0.25}});
  CHECK(at_vertex[0].mu == doctest::Approx(0.3 + 1.7 * 0.5 - 0.9 * 0.25).epsilon(1e-14));

  // linear fields are reproduced exactly anywhere
  const auto anywhere = probe(p.mesh, p.layout, s, {{0.31, 0.57}, {0.99, 0.01}});
  for (const auto& smp : anywhere)
    CHECK(smp.mu == doctest::Approx(0.3 + 1.7 * smp.point.x - 0.9 * smp.point.y).epsilon(1e-13));

  // an edge midpoint evaluation returns exactly the midpoint dof value
  const Vec2 midpoint{0.125, 0.0};
  const auto at_mid = probe(p.mesh, p.layout, s, {midpoint});
  int node = -1;
  for (int n = 0; n < static_cast<int>(p.layout.p2_nodes.size()); ++n)
    if (std::abs(p.layout.p2_nodes[n].x - midpoint.x) < 1e-14 &&
        std::abs(p.layout.p2_nodes[n].y - midpoint.y) < 1e-14)
      node = n;
  REQUIRE(node >= 0);
  CHECK(at_mid[0].u.x == doctest::Approx(s.u[p.layout.u_dof(node, 0)]).epsilon(1e-14));
  CHECK(at_mid[0].u.y == doctest::Approx(s.u[p.layout.u_dof(node, 1)]).epsilon(1e-14));

  CHECK_THROWS_AS(probe(p.mesh, p.layout, s, {{2.0, 0.0}}), LookupError);
}

TEST_CASE("solver rejects nonpositive step") {
  const Problem p = make_square(2);
  CHECK_THROWS_AS(FomSolver(p.mesh, p.layout, p.ops, p.params, 0.0), ConfigError);
}
