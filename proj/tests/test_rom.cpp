#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "core/errors.hpp"
#include "core/rom.hpp"

using namespace hmor;

namespace {

struct Setup {
  ScenarioSpec spec;
  Mesh mesh;
  FieldLayout layout;
  MaterialParams params;
  AffineOperators ops;

  explicit Setup(int nh) : spec(ScenarioSpec::square(nh)) {
    mesh = build_mesh(spec);
    layout = build_layout(mesh, spec);
    ops = assemble_affine(mesh, layout, params);
  }
};

// Orthonormal basis of the full dof space from a seeded rotation.
Eigen::MatrixXd random_orthogonal(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = dist(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
}

ReducedBasis full_rank_basis(const Setup& s, uint64_t seed) {
  ReducedBasis basis;
  basis.u.modes = random_orthogonal(s.layout.n_u, seed);
  basis.u.singular_values = Eigen::VectorXd::Ones(s.layout.n_u);
  basis.mu.modes = random_orthogonal(s.layout.n_mu, seed + 1);
  basis.mu.singular_values = Eigen::VectorXd::Ones(s.layout.n_mu);
  return basis;
}

ReducedBasis trained_basis(const Setup& s, int n_t, int r_cap, std::vector<Theta> thetas) {
  const SnapshotSet set =
      collect_snapshots(s.mesh, s.layout, s.ops, s.params, thetas, n_t, 0.25);
  return pod(set, 0.999999, r_cap);
}

}  // namespace

TEST_CASE("full-rank projection reproduces the full-order trajectory") {
  const Setup s(2);
  const int n_t = 12;
  const double t_final = 0.25;

  FomSolver fom(s.mesh, s.layout, s.ops, s.params, t_final / n_t);
  const Trajectory truth = fom.solve(n_t);

  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    const ReducedBasis basis = full_rank_basis(s, seed);
    const ReducedOperators red =
        project(s.ops, s.layout, basis, s.params, truth.states.front());
    RomSolver rom(red, {s.params.lambda, s.params.chem_factor}, t_final / n_t);
    const auto reduced = rom.solve(n_t);
    REQUIRE(reduced.size() == truth.states.size());
    for (size_t n = 0; n < reduced.size(); ++n) {
      const FomState lifted = lift(reduced[n], basis);
      CHECK((lifted.u - truth.states[n].u).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((lifted.mu - truth.states[n].mu).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("projected blocks: symmetry and a dense triple-product oracle") {
  const Setup s(4);
  const ReducedBasis basis = trained_basis(s, 10, 5, {{1200.0, 3000.0}, {1900.0, 5200.0}});
  FomSolver fom(s.mesh, s.layout, s.ops, s.params, 0.025);
  const ReducedOperators red = project(s.ops, s.layout, basis, s.params, fom.initial_state());

  CHECK((red.shear - red.shear.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((red.volumetric - red.volumetric.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((red.diffusion - red.diffusion.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  // oracle: dense column-by-column triple product of the eliminated block
  Eigen::MatrixXd a3 = Eigen::MatrixXd(s.ops.pressure_coupling);
  for (const auto& bc : s.layout.dirichlet)
    if (bc.dof < s.layout.n_u) a3.row(bc.dof).setZero();
  Eigen::MatrixXd oracle(red.r_u, red.r_mu);
  for (int j = 0; j < red.r_mu; ++j) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(s.layout.n_u);
    for (int i = 0; i < s.layout.n_u; ++i) col[i] = a3.row(i).dot(basis.mu.modes.col(j));
    oracle.col(j) = basis.u.modes.transpose() * col;
  }
  CHECK((red.coupling - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("projection validates dimensions and orthonormality") {
  const Setup s(3);
  ReducedBasis basis = trained_basis(s, 8, 4, {{1500.0, 4000.0}});
  FomSolver fom(s.mesh, s.layout, s.ops, s.params, 0.05);
  const FomState init = fom.initial_state();

  ReducedBasis wrong = basis;
  wrong.u.modes = basis.u.modes.topRows(basis.u.modes.rows() - 2);
  CHECK_THROWS_AS(project(s.ops, s.layout, wrong, s.params, init), ConfigError);

  ReducedBasis skewed = basis;
  skewed.u.modes.col(0) *= 2.0;
  CHECK_THROWS_AS(project(s.ops, s.layout, skewed, s.params, init), SolverError);
}

TEST_CASE("training-sample trajectory is reproduced within the truncation residual") {
  const Setup s(6);
  const std::vector<Theta> thetas = {{1250.0, 3200.0}, {1750.0, 4800.0}};
  const int n_t = 20;
  const SnapshotSet set = collect_snapshots(s.mesh, s.layout, s.ops, s.params, thetas, n_t, 0.25);
  const ReducedBasis basis = pod(set, 0.999999);

  MaterialParams params = s.params;
  params.lambda = thetas[0].lambda;
  params.chem_factor = thetas[0].chem_factor;
  FomSolver fom(s.mesh, s.layout, s.ops, params, 0.25 / n_t);
  const Trajectory truth = fom.solve(n_t);

  const ReducedOperators red = project(s.ops, s.layout, basis, params, truth.states.front());
  RomSolver rom(red, thetas[0], 0.25 / n_t);
  const auto reduced = rom.solve(n_t);

  // column-wise errors stay at the level of the truncation residual
  auto tail = [](const FieldBasis& b, Eigen::Index r) {
    double sum = 0.0;
    for (Eigen::Index i = r; i < b.singular_values.size(); ++i)
      sum += b.singular_values[i] * b.singular_values[i];
    return std::sqrt(sum);
  };
  const double bound_u = 5.0 * tail(basis.u, basis.u.modes.cols());
  const double bound_mu = 5.0 * tail(basis.mu, basis.mu.modes.cols());
  for (int n = 1; n <= n_t; ++n) {
    const FomState lifted = lift(reduced[n], basis);
    CHECK((lifted.u - truth.states[n].u).norm() < bound_u);
    CHECK((lifted.mu - truth.states[n].mu).norm() < bound_mu);
  }
}

TEST_CASE("equilibrium data stays constant in the reduced system") {
  Setup s(4);
  MaterialParams params = s.params;
  params.mu_ambient = params.mu_initial;
  const AffineOperators ops = assemble_affine(s.mesh, s.layout, params);

  // all snapshots sit at the equilibrium: the displacement basis comes out
  // empty and the potential basis is the single constant mode
  const std::vector<Theta> thetas = {{1400.0, 3600.0}};
  const SnapshotSet set = collect_snapshots(s.mesh, s.layout, ops, params, thetas, 10, 0.25);
  CHECK(set.u.cwiseAbs().maxCoeff() < 1e-10);  // factorization noise only
  const ReducedBasis basis = pod(set, 0.999999);
  REQUIRE(basis.mu.modes.cols() == 1);
  // the single retained potential mode is the constant one
  const Eigen::VectorXd constant =
      Eigen::VectorXd::Ones(s.layout.n_mu) / std::sqrt(double(s.layout.n_mu));
  CHECK(std::abs(std::abs(constant.dot(basis.mu.modes.col(0))) - 1.0) < 1e-9);

  FomSolver fom(s.mesh, s.layout, ops, params, 0.025);
  const FomState init = fom.initial_state();
  const ReducedOperators red = project(ops, s.layout, basis, params, init);
  RomSolver rom(red, thetas[0], 0.025);
  const auto states = rom.solve(10);
  for (const auto& st : states) {
    const FomState lifted = lift(st, basis);
    CHECK((lifted.mu - init.mu).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(lifted.u.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("lift: zero, unit and projector identities") {
  const Setup s(4);
  const ReducedBasis basis = trained_basis(s, 12, 6, {{1300.0, 3500.0}, {1700.0, 4400.0}});
  const int r_u = static_cast<int>(basis.u.modes.cols());

  RomState zero;
  zero.xi_u = Eigen::VectorXd::Zero(r_u);
  zero.xi_mu = Eigen::VectorXd::Zero(basis.mu.modes.cols());
  const FomState lifted_zero = lift(zero, basis);
  CHECK(lifted_zero.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(lifted_zero.mu.cwiseAbs().maxCoeff() == 0.0);

  for (int k = 0; k < r_u; ++k) {
    RomState unit = zero;
    unit.xi_u = Eigen::VectorXd::Unit(r_u, k);
    const FomState lifted = lift(unit, basis);
    CHECK((lifted.u - basis.u.modes.col(k)).cwiseAbs().maxCoeff() < 1e-14);
  }

  // lift of the projection leaves exactly the orthogonal-complement error
  const SnapshotSet set = collect_snapshots(s.mesh, s.layout, s.ops, s.params,
                                            {{1500.0, 4000.0}}, 6, 0.25);
  const Eigen::VectorXd snap = set.u.col(3);
  RomState proj = zero;
  proj.xi_u = basis.u.modes.transpose() * snap;
  const FomState back = lift(proj, basis);
  const double err = (back.u - snap).norm();
  const double complement =
      (snap - basis.u.modes * (basis.u.modes.transpose() * snap)).norm();
  CHECK(err == doctest::Approx(complement).epsilon(1e-10));
}

TEST_CASE("theta box check") {
  CHECK(theta_in_box({1500.0, 4000.0}, {1000.0, 2000.0}, {2000.0, 6000.0}));
  CHECK(!theta_in_box({999.0, 4000.0}, {1000.0, 2000.0}, {2000.0, 6000.0}));
  CHECK(!theta_in_box({1500.0, 6001.0}, {1000.0, 2000.0}, {2000.0, 6000.0}));
}

TEST_CASE("reduced online cost does not depend on the mesh") {
  // the reduced system dimension is set by the basis, not the grid
  const Setup coarse(3), fine(6);
  const ReducedBasis cb = trained_basis(coarse, 8, 3, {{1500.0, 4000.0}});
  const ReducedBasis fb = trained_basis(fine, 8, 3, {{1500.0, 4000.0}});
  FomSolver cf(coarse.mesh, coarse.layout, coarse.ops, coarse.params, 0.05);
  FomSolver ff(fine.mesh, fine.layout, fine.ops, fine.params, 0.05);
  const ReducedOperators cred =
      project(coarse.ops, coarse.layout, cb, coarse.params, cf.initial_state());
  const ReducedOperators fred =
      project(fine.ops, fine.layout, fb, fine.params, ff.initial_state());
  CHECK(cred.n_reduced() == fred.n_reduced());
}

TEST_CASE("speedup report: rom online wins on a modest mesh") {
  const Setup s(10);
  const ReducedBasis basis = trained_basis(s, 25, 6, {{1300.0, 3400.0}, {1800.0, 4700.0}});
  FomSolver fom(s.mesh, s.layout, s.ops, s.params, 0.01);
  const ReducedOperators red = project(s.ops, s.layout, basis, s.params, fom.initial_state());

  const SpeedupReport report = speedup_report(s.mesh, s.layout, s.ops, s.params, red,
                                              {1558.0, 4000.0}, 25, 0.25, 5);
  CHECK(report.fom_seconds > 0.0);
  CHECK(report.rom_seconds > 0.0);
  CHECK(report.ratio >= 1.0);
}
