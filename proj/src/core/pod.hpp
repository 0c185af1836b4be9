#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "core/fom.hpp"

namespace hmor {

struct Theta {
  double lambda = 0.0;
  double chem_factor = 0.0;
};

/// Training/testing sample generator over the material-parameter box.
struct ParameterSampler {
  std::array<double, 2> lambda_range{1000.0, 2000.0};
  std::array<double, 2> chem_range{2000.0, 6000.0};
  int train_count = 30;
  int test_count = 8;
  uint64_t seed = 0;
  enum class Dist { Uniform, Normal } dist = Dist::Uniform;
  // Normal only: mean/std per coordinate; draws outside the ranges are
  // rejected and redrawn.
  Theta normal_mean{1500.0, 4000.0};
  Theta normal_std{150.0, 400.0};

  void validate() const;
};

struct SampleSets {
  std::vector<Theta> train;
  std::vector<Theta> test;
};

SampleSets sample_parameters(const ParameterSampler& sampler);

struct SnapshotColumn {
  int sample = 0;
  int time_index = 0;  // 1-based step index; the initial state is excluded
  double time = 0.0;
  Theta theta;
};

/// Per-field snapshot matrices, columns ordered sample-major then time.
struct SnapshotSet {
  Eigen::MatrixXd u;
  Eigen::MatrixXd mu;
  std::vector<SnapshotColumn> columns;
  int steps_per_sample = 0;
  double t_final = 0.0;
  std::string provenance;  // layout digest of the generating discretization
};

/// Runs the full-order model per sample and stacks the states at
/// T_1..T_{N_t}. Samples run in parallel on `jobs` threads; failures abort
/// with the offending sample id.
SnapshotSet collect_snapshots(const Mesh& mesh, const FieldLayout& layout,
                              const AffineOperators& ops, const MaterialParams& base,
                              const std::vector<Theta>& thetas, int n_steps, double t_final,
                              int jobs = 1, const std::string& provenance = {});

struct SvdResult {
  Eigen::VectorXd singular_values;  // nonincreasing, strictly positive
  Eigen::MatrixXd modes;            // orthonormal columns, one per retained value
};

/// Method of snapshots: eigendecomposition of the small Gram matrix S^T S.
/// Eigenvalues below 1e-14 of the largest are dropped. With a weight matrix
/// the Gram is S^T M S and modes come out M-orthonormal.
SvdResult svd_snapshots(const Eigen::MatrixXd& snapshots, const SpMat* weight = nullptr);

/// Smallest r with sum of the leading r squared values >= eta of the total.
int truncate(const Eigen::VectorXd& singular_values, double eta);

struct FieldBasis {
  Eigen::MatrixXd modes;
  Eigen::VectorXd singular_values;  // full spectrum before truncation
  double retained_energy = 1.0;
  std::vector<int> temporal_modes_per_sample;  // nested variant only
};

struct ReducedBasis {
  enum class Method { Pod, NestedPod };
  FieldBasis u;
  FieldBasis mu;
  Method method = Method::Pod;
  double eta_space = 0.999999;
  double eta_time = 0.999999;
  bool euclidean = true;  // false when built with the mass-weighted product
};

/// Standard single-stage reduction per field. `max_rank` optionally caps the
/// mode count below what the energy criterion selects.
ReducedBasis pod(const SnapshotSet& set, double eta, int max_rank = 0,
                 const SpMat* weight_u = nullptr, const SpMat* weight_mu = nullptr);

/// Two-stage reduction: per-sample temporal compression (modes scaled by
/// their singular values, preserving the second-moment structure), then a
/// spatial pass over the stacked compressed blocks.
ReducedBasis nested_pod(const SnapshotSet& set, double eta_time, double eta_space,
                        int max_rank = 0, const SpMat* weight_u = nullptr,
                        const SpMat* weight_mu = nullptr);

/// Basis with the leading r modes of an existing decomposition.
FieldBasis head_basis(const FieldBasis& basis, int r);

/// P2-vector and P1 mass matrices for the optional weighted inner product.
SpMat u_mass_matrix(const Mesh& mesh, const FieldLayout& layout);
SpMat mu_mass_matrix(const Mesh& mesh, const FieldLayout& layout);

}  // namespace hmor
