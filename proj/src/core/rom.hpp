#pragma once

#include <Eigen/Dense>

#include "core/pod.hpp"

namespace hmor {

/// Dense projected operator blocks. Projection happens once offline; the
/// online solve only mixes these with the parameter weights.
struct ReducedOperators {
  Eigen::MatrixXd shear;        // r_u x r_u, weight 2
  Eigen::MatrixXd volumetric;   // r_u x r_u, weight lambda
  Eigen::MatrixXd coupling;     // r_u x r_mu, weight chem factor
  Eigen::MatrixXd dilation;     // r_mu x r_u
  Eigen::MatrixXd diffusion;    // r_mu x r_mu, weight dt
  Eigen::MatrixXd robin;        // r_mu x r_mu, weight dt
  // projected unit diagonals of the eliminated constraint rows; nonzero only
  // when the basis has mass on constrained dofs (full-rank verification)
  Eigen::MatrixXd bc_identity_u;
  Eigen::MatrixXd bc_identity_mu;
  Eigen::VectorXd body_load;
  Eigen::VectorXd robin_load;
  Eigen::VectorXd pressure_shift;
  Eigen::VectorXd initial_u;   // projected consistent initial condition
  Eigen::VectorXd initial_mu;
  double mu_initial = 0.0;
  double mu_ambient = 0.0;
  double alpha_robin = 0.0;
  int r_u = 0;
  int r_mu = 0;

  int n_reduced() const { return r_u + r_mu; }
};

/// Galerkin projection of the affine blocks onto the reduced bases. The
/// operator rows/columns at constrained dofs are eliminated exactly as in
/// the full-order step matrix, so a full-rank basis reproduces the solver
/// verbatim. Asserts the basis Gram matrix is the identity.
ReducedOperators project(const AffineOperators& ops, const FieldLayout& layout,
                         const ReducedBasis& basis, const MaterialParams& params,
                         const FomState& initial);

struct RomState {
  Eigen::VectorXd xi_u;
  Eigen::VectorXd xi_mu;
  double time = 0.0;
};

/// Implicit Euler on the reduced monolithic system; the dense matrix is
/// factored once per (theta, dt).
class RomSolver {
public:
  RomSolver(const ReducedOperators& red, Theta theta, double dt);

  RomState initial_state() const;
  RomState step(const RomState& state) const;
  std::vector<RomState> solve(int n_steps) const;

private:
  const ReducedOperators& red_;
  Theta theta_;
  double dt_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd dilation_;  // for the rate term on the right-hand side
  Eigen::VectorXd rhs_static_;
};

/// Warn-only range check: evaluation outside the trained box is allowed but
/// reported to the caller.
bool theta_in_box(Theta theta, const std::array<double, 2>& lambda_range,
                  const std::array<double, 2>& chem_range);

FomState lift(const RomState& state, const ReducedBasis& basis);

/// Lifted trajectory as full states (one per reduced state).
std::vector<FomState> lift_all(const std::vector<RomState>& states, const ReducedBasis& basis);

struct SpeedupReport {
  double fom_seconds = 0.0;  // median wall time
  double rom_seconds = 0.0;  // median online wall time, training excluded
  double ratio = 0.0;
  int repetitions = 0;
};

SpeedupReport speedup_report(const Mesh& mesh, const FieldLayout& layout,
                             const AffineOperators& ops, const MaterialParams& params,
                             const ReducedOperators& red, Theta theta, int n_steps, double t_final,
                             int repetitions = 5);

}  // namespace hmor
