#pragma once

#include <filesystem>
#include <optional>

#include "core/rom.hpp"

namespace hmor {

struct UqConfig {
  Theta mean{1558.0, 4000.0};
  double relative_std = 0.10;
  int sample_count = 1000;
  uint64_t seed = 0;
  std::vector<Vec2> probes{{0.0, 0.0}, {0.5, 0.0}};
  // trained box; out-of-box draws are rejected and redrawn
  std::array<double, 2> lambda_box{1000.0, 2000.0};
  std::array<double, 2> chem_box{2000.0, 6000.0};
  int checkpoint_every = 100;

  void validate() const;
};

std::vector<Theta> draw_samples(const UqConfig& cfg);

/// Per-sample time series of the process quantities of interest.
struct QoITrace {
  std::vector<double> times;
  std::vector<std::vector<double>> probe_mu;  // probe index x time
  std::vector<double> stress_mean_xx, stress_max_xx;
  std::vector<double> stress_mean_yy, stress_max_yy;
};

struct EnsembleStat {
  std::vector<double> mean, std, min, max;  // per time step
};

struct EnsembleSummary {
  std::vector<double> times;
  std::vector<EnsembleStat> probe_mu;  // one per probe point
  EnsembleStat stress_mean_xx, stress_max_xx, stress_mean_yy, stress_max_yy;
};

/// Domain-averaged normal stress per direction (area-weighted quadrature sum)
/// and its maximum over the quadrature points.
double qoi_stress_mean(const std::vector<StressSample>& stress, double area, int direction);
double qoi_stress_max(const std::vector<StressSample>& stress, int direction);

/// Quadrature-point stress as a linear map of the dof vectors; applied to
/// reduced coordinates it gives per-step quantities in O(points x rank).
class StressEvaluator {
public:
  StressEvaluator(const Mesh& mesh, const FieldLayout& layout, const MaterialParams& params);

  /// Stress components at every quadrature point for a full state.
  void evaluate(const Eigen::VectorXd& u, const Eigen::VectorXd& mu, Eigen::VectorXd& xx,
                Eigen::VectorXd& yy) const;
  const Eigen::VectorXd& weights() const { return weights_; }
  double area() const { return area_; }

private:
  SpMat u_to_xx_, u_to_yy_;    // displacement contribution
  SpMat mu_to_iso_;            // isotropic potential contribution (same for xx/yy)
  double pressure_offset_ = 0.0;  // + A * mu0 constant term
  Eigen::VectorXd weights_;
  double area_ = 0.0;
};

struct PropagateResult {
  std::vector<Theta> samples;
  std::vector<QoITrace> traces;   // one per sample, merged by sample index
  EnsembleSummary summary;
  std::vector<int> skipped;       // sample ids whose solve failed
};

/// One reduced solve per sample over an immutable package; sample-parallel
/// with a deterministic merge. More than 1% failed solves aborts.
PropagateResult propagate(const UqConfig& cfg, const Mesh& mesh, const FieldLayout& layout,
                          const ReducedOperators& red, const ReducedBasis& basis,
                          const MaterialParams& base, int n_steps, double t_final, int jobs = 1,
                          const std::optional<std::filesystem::path>& checkpoint_path = {});

}  // namespace hmor
