#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "core/pod.hpp"

namespace hmor {

/// Full-field observations at a set of times.
struct Observation {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> mu;
  std::string provenance;  // synthetic-fom | external

  void validate(double t_final) const;
};

/// Forward evaluation: full fields at the observation times for a parameter
/// point. Both the full-order solver and the reduced model implement this.
struct ForwardFields {
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> mu;
};
using ForwardModel = std::function<ForwardFields(Theta)>;

/// Composite relative discrepancy, summed over observation times:
/// |u_obs - u|/|u_obs| + |mu_obs - mu|/|mu_obs| per time.
double loss(Theta theta, const Observation& obs, const ForwardModel& forward);

struct OptimizerSettings {
  std::array<double, 2> lambda_bounds{1000.0, 2000.0};
  std::array<double, 2> chem_bounds{2000.0, 6000.0};
  Theta initial{1800.0, 3800.0};
  int maxfun = 15000;
  int maxiter = 15000;
  double ftol = 2.22e-9;
  double gtol = 1e-5;
  double eps = 1e-8;  // forward-difference step scale
  int maxls = 20;
  int memory = 10;

  void validate() const;
};

struct IdentReport {
  Theta optimum;
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // accepted iterates
  int evaluations = 0;             // forward-model calls
  int iterations = 0;
  double seconds = 0.0;
  const char* stop_reason = "";
};

/// Bound-constrained limited-memory quasi-Newton minimization of a generic
/// two-parameter objective; forward-difference gradients, gradient
/// projection on the box, backtracking line search.
IdentReport minimize_box(const std::function<double(Theta)>& objective,
                         const OptimizerSettings& settings);

/// Full-field identification: wraps the composite loss into minimize_box.
IdentReport identify(const Observation& obs, const ForwardModel& forward,
                     const OptimizerSettings& settings);

struct GridResult {
  Theta best;
  double best_loss = 0.0;
  std::vector<double> lambda_values;
  std::vector<double> chem_values;
  Eigen::MatrixXd losses;  // lambda index x chem index
};

/// Exhaustive loss evaluation on a tensor grid; verification oracle for the
/// optimizer.
GridResult grid_oracle(const Observation& obs, const ForwardModel& forward,
                       const std::vector<double>& lambda_values,
                       const std::vector<double>& chem_values);

/// Forward models over the scenario discretization.
ForwardModel make_fom_forward(const Mesh& mesh, const FieldLayout& layout,
                              const AffineOperators& ops, const MaterialParams& base, int n_steps,
                              double t_final, const std::vector<double>& times);
ForwardModel make_rom_forward(const ReducedOperators& red, const ReducedBasis& basis, int n_steps,
                              double t_final, const std::vector<double>& times);

/// Maps observation times to step indices of a uniform grid; rejects times
/// that do not line up.
std::vector<int> observation_step_indices(const std::vector<double>& times, int n_steps,
                                          double t_final);

}  // namespace hmor
