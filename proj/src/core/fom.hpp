#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <vector>

#include "core/geometry.hpp"

namespace hmor {

using SpMat = Eigen::SparseMatrix<double>;

/// Dimensionless material data and boundary/initial values of the coupled
/// swelling model.
struct MaterialParams {
  double lambda = 1558.0;       // dimensionless first Lame constant
  double chem_factor = 4000.0;  // dimensionless chemo-mechanical scaling (A)
  double alpha_robin = 0.66;
  double mu_initial = -0.3124;
  double mu_ambient = 0.0;
  Vec2 body_force{0.0, 0.0};

  void validate() const;
};

/// Dimensional source values; converted by normalize().
struct DimensionalParams {
  double length_m = 0.0015;
  double kT_joule = 4e-21;
  double fluid_molecular_volume_m3 = 3e-29;
  double diffusivity_m2_s = 1.6e-11;
  double shear_modulus_pa = 33e3;
  double lame_drained_pa = 1600.0 * 33e3;
};

struct NormalizationResult {
  double lambda = 0.0;
  double chem_factor = 0.0;
  double seconds_per_time_unit = 0.0;  // t = T * l^2 / D
};

NormalizationResult normalize(const DimensionalParams& dim);

/// Parameter-independent operator blocks of the affine decomposition. All
/// matrices are assembled without boundary-condition elimination; the solver
/// applies row/column elimination when the monolithic matrix is formed.
struct AffineOperators {
  SpMat shear_stiffness;      // strain : strain, weighted by 2
  SpMat volumetric_stiffness; // div u * div v, weighted by lambda
  SpMat pressure_coupling;    // -(mu) * div v, weighted by the chem factor
  SpMat dilation_coupling;    // div(du/dT) tested against the scalar field
  SpMat diffusion_stiffness;  // grad mu . grad q
  SpMat robin_mass;           // boundary exchange, alpha_robin baked in
  Eigen::VectorXd body_load;      // volume force contribution per u dof
  Eigen::VectorXd robin_load;     // alpha_robin * mu_ambient boundary term
  Eigen::VectorXd pressure_shift; // pressure_coupling * ones: reference-potential offset
  int n_u = 0;
  int n_mu = 0;
};

AffineOperators assemble_affine(const Mesh& mesh, const FieldLayout& layout,
                                const MaterialParams& params);

struct FomState {
  Eigen::VectorXd u;   // length n_u
  Eigen::VectorXd mu;  // length n_mu
  double time = 0.0;
};

struct Trajectory {
  std::vector<FomState> states;  // states[n] at T = n * dt
  double dt = 0.0;
};

/// Optional hooks used by the verification harness: space/time dependent
/// volume sources and Dirichlet values. Component is 0/1 for displacement,
/// 2 for the potential field.
struct TransientSources {
  std::function<Vec2(Vec2, double)> body_force;
  std::function<double(Vec2, double)> mass_source;
  std::function<double(Vec2, int, double)> dirichlet_value;

  bool empty() const { return !body_force && !mass_source && !dirichlet_value; }
};

/// Monolithic implicit-Euler solver. The step matrix is constant for fixed
/// (theta, dt), so it is eliminated and factorized once and reused.
class FomSolver {
public:
  FomSolver(const Mesh& mesh, const FieldLayout& layout, const AffineOperators& ops,
            const MaterialParams& params, double dt, TransientSources sources = {});

  FomState initial_state() const;
  FomState step(const FomState& state) const;
  Trajectory solve(int n_steps) const;

  const MaterialParams& params() const { return params_; }
  double dt() const { return dt_; }

private:
  Eigen::VectorXd dirichlet_values(double time) const;

  const Mesh& mesh_;
  const FieldLayout& layout_;
  const AffineOperators& ops_;
  MaterialParams params_;
  double dt_;
  TransientSources sources_;
  std::vector<int> constrained_;
  std::vector<std::pair<Vec2, int>> constrained_points_;  // node coordinate + component
  SpMat dirichlet_columns_;  // columns of the un-eliminated monolithic matrix
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_;
  std::unique_ptr<Eigen::SparseLU<SpMat>> momentum_lu_;  // for the initial state
  SpMat momentum_dirichlet_columns_;
};

/// Convenience end-to-end solve for a scenario.
Trajectory solve_fom(const Mesh& mesh, const FieldLayout& layout, const AffineOperators& ops,
                     const MaterialParams& params, int n_steps, double t_final);

/// Stress sample at one quadrature point, with its area weight.
struct StressSample {
  Vec2 point;
  double weight = 0.0;
  double xx = 0.0, yy = 0.0, xy = 0.0;
};

/// Normalized stress 2 eps + lambda tr(eps) I - A (mu - mu0) I evaluated at
/// every quadrature point of the mesh.
std::vector<StressSample> stress_field(const Mesh& mesh, const FieldLayout& layout,
                                       const FomState& state, const MaterialParams& params);

struct ProbeSample {
  Vec2 point;
  double mu = 0.0;
  Vec2 u{0.0, 0.0};
};

std::vector<ProbeSample> probe(const Mesh& mesh, const FieldLayout& layout, const FomState& state,
                               const std::vector<Vec2>& points);

/// Finite-element evaluation helpers shared by probing and error norms.
double eval_mu(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu,
               const PointLocation& loc);
Vec2 eval_u(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u,
            const PointLocation& loc);
Vec2 eval_grad_mu(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu,
                  const PointLocation& loc);
std::array<Vec2, 2> eval_grad_u(const Mesh& mesh, const FieldLayout& layout,
                                const Eigen::VectorXd& u, const PointLocation& loc);

/// Quadrature-exact load assembly against the quadratic vector space (volume
/// force f) and the linear scalar space (source s); used per time step when
/// transient sources are present.
Eigen::VectorXd assemble_u_load(const Mesh& mesh, const FieldLayout& layout,
                                const std::function<Vec2(Vec2)>& f);
Eigen::VectorXd assemble_mu_load(const Mesh& mesh, const FieldLayout& layout,
                                 const std::function<double(Vec2)>& s);

}  // namespace hmor
