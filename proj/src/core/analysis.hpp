#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/pod.hpp"

namespace hmor {

enum class NormId { L1, L2, Linf, H1 };

std::string norm_name(NormId id);

/// Norms of finite-element functions given by their dof vectors. L1/L2 are
/// element-quadrature integrals, H1 is the gradient seminorm, Linf the
/// maximum over dofs.
double mu_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu, NormId id);
double u_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u, NormId id);

/// Errors against analytic fields, quadrature-evaluated (verification use).
double mu_error_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu,
                     NormId id, const std::function<double(Vec2)>& exact,
                     const std::function<Vec2(Vec2)>& exact_grad);
double u_error_norm(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u,
                    NormId id, const std::function<Vec2(Vec2)>& exact,
                    const std::function<std::array<Vec2, 2>(Vec2)>& exact_grad);

/// Errors against a reference solution living on a finer mesh of the same
/// family; the reference is sampled at the coarse quadrature points.
double mu_error_vs_reference(const Mesh& mesh, const FieldLayout& layout,
                             const Eigen::VectorXd& mu, NormId id, const Mesh& ref_mesh,
                             const FieldLayout& ref_layout, const Eigen::VectorXd& ref_mu);
double u_error_vs_reference(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u,
                            NormId id, const Mesh& ref_mesh, const FieldLayout& ref_layout,
                            const Eigen::VectorXd& ref_u);

/// Heuristic order from three refinement levels; the differences cancel a
/// constant reference bias. Throws on a vanishing denominator.
double convergence_order(double e_h, double e_h2, double e_h4);

struct ConvergenceReport {
  std::vector<int> levels;
  int reference = 0;
  std::vector<double> u_l2, u_h1, mu_l2, mu_h1;  // per level
  double order_u_l2 = 0, order_u_h1 = 0, order_mu_l2 = 0, order_mu_h1 = 0;
};

/// Self-convergence of the scenario solve under mesh refinement, errors at
/// the final time against the reference-density solution.
ConvergenceReport scenario_spatial_study(const ScenarioSpec& base, const MaterialParams& params,
                                         const std::vector<int>& densities, int reference_density,
                                         int n_steps, double t_final);

/// Self-convergence under time refinement on a fixed mesh.
ConvergenceReport scenario_temporal_study(const ScenarioSpec& base, const MaterialParams& params,
                                          const std::vector<int>& step_counts,
                                          int reference_steps, double t_final);

/// Manufactured exact solution with its sources; all callables take the
/// physical point and the time.
struct MmsCase {
  std::string name;
  MaterialParams params;
  std::function<Vec2(Vec2, double)> u_exact;
  std::function<std::array<Vec2, 2>(Vec2, double)> grad_u_exact;
  std::function<double(Vec2, double)> mu_exact;
  std::function<Vec2(Vec2, double)> grad_mu_exact;
  std::function<Vec2(Vec2, double)> body_force;
  std::function<double(Vec2, double)> mass_source;
};

/// Quadratic displacement / linear potential, steady: reproduced to machine
/// precision by the pair.
MmsCase mms_quadratic_steady();
/// Same fields under an exponential time factor: spatial part stays in the
/// element spaces, so the error isolates the time discretization.
MmsCase mms_polynomial_transient();
/// Cubic displacement / quadratic potential, steady: optimal spatial rates.
MmsCase mms_cubic_steady();

struct MmsSolution {
  Mesh mesh;
  FieldLayout layout;
  FomState final_state;
};

MmsSolution mms_solve(const MmsCase& mms, int density, int n_steps, double t_final);

ConvergenceReport mms_spatial_study(const MmsCase& mms, const std::vector<int>& densities,
                                    int n_steps, double t_final);
ConvergenceReport mms_temporal_study(const MmsCase& mms, int density,
                                     const std::vector<int>& step_counts, double t_final);

struct RomErrorRow {
  int rank = 0;
  double l2_mean = 0, l2_max = 0;
  double l1_mean = 0, l1_max = 0;
  double linf_mean = 0, linf_max = 0;
};

struct RomErrorTable {
  std::vector<RomErrorRow> u_rows;
  std::vector<RomErrorRow> mu_rows;
};

/// Final-time errors of the lifted reduced solve against the full-order
/// solve over a test set, for every rank up to r_max. The full-order
/// trajectories are computed once and shared across ranks.
RomErrorTable rom_error_table(const Mesh& mesh, const FieldLayout& layout,
                              const AffineOperators& ops, const MaterialParams& base,
                              const ReducedBasis& basis, const std::vector<Theta>& test_set,
                              int n_steps, double t_final, int r_max);

}  // namespace hmor
