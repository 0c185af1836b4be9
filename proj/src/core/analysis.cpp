#include "core/analysis.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/rom.hpp"

namespace hmor {

std::string norm_name(NormId id) {
  switch (id) {
    case NormId::L1: return "l1";
    case NormId::L2: return "l2";
    case NormId::Linf: return "linf";
    case NormId::H1: return "h1";
  }
  return "?";
}

namespace {

// Quadrature loop shared by every integral norm; the callback returns the
// squared (L2/H1) or absolute (L1) local density.
template <typename F>
double integrate(const Mesh& mesh, F&& density) {
  const auto quad = tri_quadrature_deg6();
  double sum = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const TriangleFrame frame = triangle_frame(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                               mesh.vertices[tri[2]]);
    for (const auto& q : quad) sum += q.weight * frame.area * density(static_cast<int>(t), q);
  }
  return sum;
}

}  // namespace

double mu_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu, NormId id) {
  switch (id) {
    case NormId::Linf:
      return mu.size() ? mu.cwiseAbs().maxCoeff() : 0.0;
    case NormId::L1:
      return integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        return std::abs(eval_mu(mesh, layout, mu, loc));
      });
    case NormId::L2:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const double v = eval_mu(mesh, layout, mu, loc);
        return v * v;
      }));
    case NormId::H1:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const Vec2 g = eval_grad_mu(mesh, layout, mu, loc);
        return g.x * g.x + g.y * g.y;
      }));
  }
  return 0.0;
}

double u_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u, NormId id) {
  switch (id) {
    case NormId::Linf:
      return u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
    case NormId::L1:
      return integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const Vec2 v = eval_u(mesh, layout, u, loc);
        return std::hypot(v.x, v.y);
      });
    case NormId::L2:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const Vec2 v = eval_u(mesh, layout, u, loc);
        return v.x * v.x + v.y * v.y;
      }));
    case NormId::H1:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const auto g = eval_grad_u(mesh, layout, u, loc);
        return g[0].x * g[0].x + g[0].y * g[0].y + g[1].x * g[1].x + g[1].y * g[1].y;
      }));
  }
  return 0.0;
}

double mu_error_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu,
                     NormId id, const std::function<double(Vec2)>& exact,
                     const std::function<Vec2(Vec2)>& exact_grad) {
  auto point_of = [&mesh](int t, const TriQuadPoint& q) {
    const auto& tri = mesh.triangles[t];
    return barycentric_point(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]],
                             q.bary);
  };
  switch (id) {
    case NormId::Linf: {
      // dof-wise: compare against the exact values at the vertices
      double worst = 0.0;
      for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v)
        worst = std::max(worst,
                         std::abs(mu[layout.mu_dof_of_vertex[v]] - exact(mesh.vertices[v])));
      return worst;
    }
    case NormId::L1:
      return integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        return std::abs(eval_mu(mesh, layout, mu, loc) - exact(point_of(t, q)));
      });
    case NormId::L2:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const double e = eval_mu(mesh, layout, mu, loc) - exact(point_of(t, q));
        return e * e;
      }));
    case NormId::H1:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const Vec2 g = eval_grad_mu(mesh, layout, mu, loc);
        const Vec2 ge = exact_grad(point_of(t, q));
        const Vec2 d{g.x - ge.x, g.y - ge.y};
        return d.x * d.x + d.y * d.y;
      }));
  }
  return 0.0;
}

double u_error_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u,
                    NormId id, const std::function<Vec2(Vec2)>& exact,
                    const std::function<std::array<Vec2, 2>(Vec2)>& exact_grad) {
  auto point_of = [&mesh](int t, const TriQuadPoint& q) {
    const auto& tri = mesh.triangles[t];
    return barycentric_point(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]],
                             q.bary);
  };
  switch (id) {
    case NormId::Linf: {
      double worst = 0.0;
      for (int n = 0; n < static_cast<int>(layout.p2_nodes.size()); ++n) {
        const Vec2 e = exact(layout.p2_nodes[n]);
        worst = std::max(worst, std::abs(u[layout.u_dof(n, 0)] - e.x));
        worst = std::max(worst, std::abs(u[layout.u_dof(n, 1)] - e.y));
      }
      return worst;
    }
    case NormId::L1:
      return integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const Vec2 v = eval_u(mesh, layout, u, loc);
        const Vec2 e = exact(point_of(t, q));
        return std::hypot(v.x - e.x, v.y - e.y);
      });
    case NormId::L2:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const Vec2 v = eval_u(mesh, layout, u, loc);
        const Vec2 e = exact(point_of(t, q));
        const double dx = v.x - e.x, dy = v.y - e.y;
        return dx * dx + dy * dy;
      }));
    case NormId::H1:
      return std::sqrt(integrate(mesh, [&](int t, const TriQuadPoint& q) {
        PointLocation loc{t, q.bary};
        const auto g = eval_grad_u(mesh, layout, u, loc);
        const auto ge = exact_grad(point_of(t, q));
        double sum = 0.0;
        for (int r = 0; r < 2; ++r) {
          const double dx = g[r].x - ge[r].x, dy = g[r].y - ge[r].y;
          sum += dx * dx + dy * dy;
        }
        return sum;
      }));
  }
  return 0.0;
}

double mu_error_vs_reference(const Mesh& mesh, const FieldLayout& layout,
                             const Eigen::VectorXd& mu, NormId id, const Mesh& ref_mesh,
                             const FieldLayout& ref_layout, const Eigen::VectorXd& ref_mu) {
  return mu_error_norm(
      mesh, layout, mu, id,
      [&](Vec2 p) { return eval_mu(ref_mesh, ref_layout, ref_mu, locate_point(ref_mesh, p)); },
      [&](Vec2 p) {
        return eval_grad_mu(ref_mesh, ref_layout, ref_mu, locate_point(ref_mesh, p));
      });
}

double u_error_vs_reference(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u,
                            NormId id, const Mesh& ref_mesh, const FieldLayout& ref_layout,
                            const Eigen::VectorXd& ref_u) {
  return u_error_norm(
      mesh, layout, u, id,
      [&](Vec2 p) { return eval_u(ref_mesh, ref_layout, ref_u, locate_point(ref_mesh, p)); },
      [&](Vec2 p) {
        return eval_grad_u(ref_mesh, ref_layout, ref_u, locate_point(ref_mesh, p));
      });
}

double convergence_order(double e_h, double e_h2, double e_h4) {
  if (!(e_h > 0.0) || !(e_h2 > 0.0) || !(e_h4 > 0.0))
    throw ConfigError("convergence order needs three positive errors");
  const double num = e_h - e_h2;
  const double den = e_h2 - e_h4;
  if (den == 0.0) throw SolverError("undefined convergence order: equal consecutive errors");
  return std::log2(std::abs(num / den));
}

namespace {

void fill_orders(ConvergenceReport& report) {
  if (report.levels.size() < 3) throw ConfigError("order estimation needs at least 3 levels");
  const size_t n = report.levels.size();
  report.order_u_l2 = convergence_order(report.u_l2[n - 3], report.u_l2[n - 2], report.u_l2[n - 1]);
  report.order_u_h1 = convergence_order(report.u_h1[n - 3], report.u_h1[n - 2], report.u_h1[n - 1]);
  report.order_mu_l2 =
      convergence_order(report.mu_l2[n - 3], report.mu_l2[n - 2], report.mu_l2[n - 1]);
  report.order_mu_h1 =
      convergence_order(report.mu_h1[n - 3], report.mu_h1[n - 2], report.mu_h1[n - 1]);
}

}  // namespace

ConvergenceReport scenario_spatial_study(const ScenarioSpec& base, const MaterialParams& params,
                                         const std::vector<int>& densities, int reference_density,
                                         int n_steps, double t_final) {
  ConvergenceReport report;
  report.levels = densities;
  report.reference = reference_density;

  ScenarioSpec ref_spec = base;
  ref_spec.density = reference_density;
  const Mesh ref_mesh = build_mesh(ref_spec);
  const FieldLayout ref_layout = build_layout(ref_mesh, ref_spec);
  const AffineOperators ref_ops = assemble_affine(ref_mesh, ref_layout, params);
  const Trajectory ref_traj = solve_fom(ref_mesh, ref_layout, ref_ops, params, n_steps, t_final);
  const FomState& ref = ref_traj.states.back();

  for (int density : densities) {
    ScenarioSpec spec = base;
    spec.density = density;
    const Mesh mesh = build_mesh(spec);
    const FieldLayout layout = build_layout(mesh, spec);
    const AffineOperators ops = assemble_affine(mesh, layout, params);
    const FomState state = solve_fom(mesh, layout, ops, params, n_steps, t_final).states.back();

    report.u_l2.push_back(
        u_error_vs_reference(mesh, layout, state.u, NormId::L2, ref_mesh, ref_layout, ref.u));
    report.u_h1.push_back(
        u_error_vs_reference(mesh, layout, state.u, NormId::H1, ref_mesh, ref_layout, ref.u));
    report.mu_l2.push_back(
        mu_error_vs_reference(mesh, layout, state.mu, NormId::L2, ref_mesh, ref_layout, ref.mu));
    report.mu_h1.push_back(
        mu_error_vs_reference(mesh, layout, state.mu, NormId::H1, ref_mesh, ref_layout, ref.mu));
  }
  fill_orders(report);
  return report;
}

ConvergenceReport scenario_temporal_study(const ScenarioSpec& base, const MaterialParams& params,
                                          const std::vector<int>& step_counts,
                                          int reference_steps, double t_final) {
  ConvergenceReport report;
  report.levels = step_counts;
  report.reference = reference_steps;

  const Mesh mesh = build_mesh(base);
  const FieldLayout layout = build_layout(mesh, base);
  const AffineOperators ops = assemble_affine(mesh, layout, params);
  const FomState ref = solve_fom(mesh, layout, ops, params, reference_steps, t_final).states.back();

  for (int n_steps : step_counts) {
    const FomState state = solve_fom(mesh, layout, ops, params, n_steps, t_final).states.back();
    const Eigen::VectorXd du = state.u - ref.u;
    const Eigen::VectorXd dmu = state.mu - ref.mu;
    report.u_l2.push_back(u_norm(mesh, layout, du, NormId::L2));
    report.u_h1.push_back(u_norm(mesh, layout, du, NormId::H1));
    report.mu_l2.push_back(mu_norm(mesh, layout, dmu, NormId::L2));
    report.mu_h1.push_back(mu_norm(mesh, layout, dmu, NormId::H1));
  }
  fill_orders(report);
  return report;
}

namespace {

// moderate coefficients keep the verification error constants tame
MaterialParams mms_params() {
  MaterialParams p;
  p.lambda = 2.0;
  p.chem_factor = 3.0;
  p.alpha_robin = 0.0;
  p.mu_initial = 0.0;
  p.mu_ambient = 0.0;
  return p;
}

}  // namespace

MmsCase mms_quadratic_steady() {
  MmsCase c;
  c.name = "quadratic_steady";
  c.params = mms_params();
  const double lam = c.params.lambda, a = c.params.chem_factor;
  c.u_exact = [](Vec2 p, double) { return Vec2{p.x * p.x, p.x * p.y}; };
  c.grad_u_exact = [](Vec2 p, double) {
    return std::array<Vec2, 2>{Vec2{2 * p.x, 0.0}, Vec2{p.y, p.x}};
  };
  c.mu_exact = [](Vec2 p, double) { return p.x + p.y; };
  c.grad_mu_exact = [](Vec2, double) { return Vec2{1.0, 1.0}; };
  c.body_force = [lam, a](Vec2, double) { return Vec2{-(5.0 + 3.0 * lam - a), a}; };
  c.mass_source = [](Vec2, double) { return 0.0; };
  return c;
}

MmsCase mms_polynomial_transient() {
  MmsCase c = mms_quadratic_steady();
  c.name = "polynomial_transient";
  const double lam = c.params.lambda, a = c.params.chem_factor;
  auto g = [](double t) { return std::exp(-t); };
  c.u_exact = [g](Vec2 p, double t) { return Vec2{p.x * p.x * g(t), p.x * p.y * g(t)}; };
  c.grad_u_exact = [g](Vec2 p, double t) {
    return std::array<Vec2, 2>{Vec2{2 * p.x * g(t), 0.0}, Vec2{p.y * g(t), p.x * g(t)}};
  };
  c.mu_exact = [g](Vec2 p, double t) { return (p.x + p.y) * g(t); };
  c.grad_mu_exact = [g](Vec2, double t) { return Vec2{g(t), g(t)}; };
  c.body_force = [g, lam, a](Vec2, double t) {
    return Vec2{-(5.0 + 3.0 * lam - a) * g(t), a * g(t)};
  };
  // dilation rate 3x g'(t) with g' = -g; the potential is harmonic
  c.mass_source = [g](Vec2 p, double t) { return -3.0 * p.x * g(t); };
  return c;
}

MmsCase mms_cubic_steady() {
  MmsCase c;
  c.name = "cubic_steady";
  c.params = mms_params();
  const double lam = c.params.lambda, a = c.params.chem_factor;
  c.u_exact = [](Vec2 p, double) { return Vec2{p.x * p.x * p.x, p.y * p.y * p.y}; };
  c.grad_u_exact = [](Vec2 p, double) {
    return std::array<Vec2, 2>{Vec2{3 * p.x * p.x, 0.0}, Vec2{0.0, 3 * p.y * p.y}};
  };
  c.mu_exact = [](Vec2 p, double) { return p.x * p.x + p.y * p.y; };
  c.grad_mu_exact = [](Vec2 p, double) { return Vec2{2 * p.x, 2 * p.y}; };
  const double coeff = 12.0 + 6.0 * lam - 2.0 * a;
  c.body_force = [coeff](Vec2 p, double) { return Vec2{-coeff * p.x, -coeff * p.y}; };
  c.mass_source = [](Vec2, double) { return -4.0; };  // -laplacian of the potential
  return c;
}

MmsSolution mms_solve(const MmsCase& mms, int density, int n_steps, double t_final) {
  MmsSolution sol;
  sol.mesh = build_mesh(ScenarioSpec::square(density));
  sol.layout = build_layout_all_dirichlet(sol.mesh);
  const AffineOperators ops = assemble_affine(sol.mesh, sol.layout, mms.params);

  TransientSources sources;
  sources.body_force = mms.body_force;
  sources.mass_source = mms.mass_source;
  sources.dirichlet_value = [&mms](Vec2 p, int component, double t) {
    if (component == 2) return mms.mu_exact(p, t);
    const Vec2 u = mms.u_exact(p, t);
    return component == 0 ? u.x : u.y;
  };

  FomSolver solver(sol.mesh, sol.layout, ops, mms.params, t_final / n_steps, sources);

  // exact data at T = 0
  FomState state;
  state.time = 0.0;
  state.u.resize(sol.layout.n_u);
  state.mu.resize(sol.layout.n_mu);
  for (int n = 0; n < static_cast<int>(sol.layout.p2_nodes.size()); ++n) {
    const Vec2 u0 = mms.u_exact(sol.layout.p2_nodes[n], 0.0);
    state.u[sol.layout.u_dof(n, 0)] = u0.x;
    state.u[sol.layout.u_dof(n, 1)] = u0.y;
  }
  for (int v = 0; v < static_cast<int>(sol.mesh.vertices.size()); ++v)
    state.mu[sol.layout.mu_dof_of_vertex[v]] = mms.mu_exact(sol.mesh.vertices[v], 0.0);

  for (int n = 0; n < n_steps; ++n) state = solver.step(state);
  sol.final_state = state;
  return sol;
}

namespace {

void mms_errors(const MmsCase& mms, const MmsSolution& sol, double t, ConvergenceReport& report) {
  auto u_exact = [&](Vec2 p) { return mms.u_exact(p, t); };
  auto gu_exact = [&](Vec2 p) { return mms.grad_u_exact(p, t); };
  auto mu_exact = [&](Vec2 p) { return mms.mu_exact(p, t); };
  auto gmu_exact = [&](Vec2 p) { return mms.grad_mu_exact(p, t); };
  report.u_l2.push_back(
      u_error_norm(sol.mesh, sol.layout, sol.final_state.u, NormId::L2, u_exact, gu_exact));
  report.u_h1.push_back(
      u_error_norm(sol.mesh, sol.layout, sol.final_state.u, NormId::H1, u_exact, gu_exact));
  report.mu_l2.push_back(
      mu_error_norm(sol.mesh, sol.layout, sol.final_state.mu, NormId::L2, mu_exact, gmu_exact));
  report.mu_h1.push_back(
      mu_error_norm(sol.mesh, sol.layout, sol.final_state.mu, NormId::H1, mu_exact, gmu_exact));
}

}  // namespace

ConvergenceReport mms_spatial_study(const MmsCase& mms, const std::vector<int>& densities,
                                    int n_steps, double t_final) {
  ConvergenceReport report;
  report.levels = densities;
  for (int density : densities) {
    const MmsSolution sol = mms_solve(mms, density, n_steps, t_final);
    mms_errors(mms, sol, t_final, report);
  }
  fill_orders(report);
  return report;
}

ConvergenceReport mms_temporal_study(const MmsCase& mms, int density,
                                     const std::vector<int>& step_counts, double t_final) {
  ConvergenceReport report;
  report.levels = step_counts;
  for (int n_steps : step_counts) {
    const MmsSolution sol = mms_solve(mms, density, n_steps, t_final);
    mms_errors(mms, sol, t_final, report);
  }
  fill_orders(report);
  return report;
}

RomErrorTable rom_error_table(const Mesh& mesh, const FieldLayout& layout,
                              const AffineOperators& ops, const MaterialParams& base,
                              const ReducedBasis& basis, const std::vector<Theta>& test_set,
                              int n_steps, double t_final, int r_max) {
  if (test_set.empty()) throw ConfigError("empty test set for the error table");
  const int available = static_cast<int>(
      std::min(basis.u.modes.cols(), basis.mu.modes.cols()));
  r_max = std::min(r_max, available);
  if (r_max < 1) throw ConfigError("basis has no modes for the error table");

  // full-order references at the final time, one per test point
  std::vector<FomState> truth;
  truth.reserve(test_set.size());
  for (const Theta& theta : test_set) {
    MaterialParams params = base;
    params.lambda = theta.lambda;
    params.chem_factor = theta.chem_factor;
    truth.push_back(solve_fom(mesh, layout, ops, params, n_steps, t_final).states.back());
  }

  RomErrorTable table;
  const double dt = t_final / n_steps;
  for (int r = 1; r <= r_max; ++r) {
    ReducedBasis sliced = basis;
    sliced.u = head_basis(basis.u, r);
    sliced.mu = head_basis(basis.mu, r);

    MaterialParams params = base;
    FomSolver init_solver(mesh, layout, ops, params, dt);
    const FomState initial = init_solver.initial_state();
    const ReducedOperators red = project(ops, layout, sliced, params, initial);

    RomErrorRow u_row, mu_row;
    u_row.rank = mu_row.rank = r;
    u_row.l2_mean = u_row.l1_mean = u_row.linf_mean = 0.0;
    for (size_t i = 0; i < test_set.size(); ++i) {
      RomSolver rom(red, test_set[i], dt);
      const auto reduced = rom.solve(n_steps);
      const FomState lifted = lift(reduced.back(), sliced);
      const Eigen::VectorXd du = lifted.u - truth[i].u;
      const Eigen::VectorXd dmu = lifted.mu - truth[i].mu;

      const double ul2 = u_norm(mesh, layout, du, NormId::L2);
      const double ul1 = u_norm(mesh, layout, du, NormId::L1);
      const double ulinf = u_norm(mesh, layout, du, NormId::Linf);
      u_row.l2_mean += ul2;
      u_row.l1_mean += ul1;
      u_row.linf_mean += ulinf;
      u_row.l2_max = std::max(u_row.l2_max, ul2);
      u_row.l1_max = std::max(u_row.l1_max, ul1);
      u_row.linf_max = std::max(u_row.linf_max, ulinf);

      const double ml2 = mu_norm(mesh, layout, dmu, NormId::L2);
      const double ml1 = mu_norm(mesh, layout, dmu, NormId::L1);
      const double mlinf = mu_norm(mesh, layout, dmu, NormId::Linf);
      mu_row.l2_mean += ml2;
      mu_row.l1_mean += ml1;
      mu_row.linf_mean += mlinf;
      mu_row.l2_max = std::max(mu_row.l2_max, ml2);
      mu_row.l1_max = std::max(mu_row.l1_max, ml1);
      mu_row.linf_max = std::max(mu_row.linf_max, mlinf);
    }
    const double count = static_cast<double>(test_set.size());
    u_row.l2_mean /= count;
    u_row.l1_mean /= count;
    u_row.linf_mean /= count;
    mu_row.l2_mean /= count;
    mu_row.l1_mean /= count;
    mu_row.linf_mean /= count;
    table.u_rows.push_back(u_row);
    table.mu_rows.push_back(mu_row);
  }
  return table;
}

}  // namespace hmor
