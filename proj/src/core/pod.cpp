#include "core/pod.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hmor {

void ParameterSampler::validate() const {
  // degenerate [c, c] ranges are allowed; reversed ones are not
  if (lambda_range[0] > lambda_range[1]) throw ConfigError("lambda range is reversed");
  if (chem_range[0] > chem_range[1]) throw ConfigError("chem-factor range is reversed");
  if (train_count < 0 || test_count < 0) throw ConfigError("sample counts must be nonnegative");
}

namespace {

Theta draw_one(RngStream& rng, const ParameterSampler& s) {
  if (s.dist == ParameterSampler::Dist::Uniform)
    return {rng.uniform(s.lambda_range[0], s.lambda_range[1]),
            rng.uniform(s.chem_range[0], s.chem_range[1])};
  // rejection keeps normal draws inside the box
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Theta t{rng.normal(s.normal_mean.lambda, s.normal_std.lambda),
                  rng.normal(s.normal_mean.chem_factor, s.normal_std.chem_factor)};
    if (t.lambda >= s.lambda_range[0] && t.lambda <= s.lambda_range[1] &&
        t.chem_factor >= s.chem_range[0] && t.chem_factor <= s.chem_range[1])
      return t;
  }
  throw SolverError("normal sampling kept rejecting; check mean/std against the ranges");
}

}  // namespace

SampleSets sample_parameters(const ParameterSampler& sampler) {
  sampler.validate();
  SampleSets out;
  RngStream train_rng = RngStream::substream(sampler.seed, 1);
  RngStream test_rng = RngStream::substream(sampler.seed, 2);
  out.train.reserve(sampler.train_count);
  for (int i = 0; i < sampler.train_count; ++i) out.train.push_back(draw_one(train_rng, sampler));
  out.test.reserve(sampler.test_count);
  for (int i = 0; i < sampler.test_count; ++i) out.test.push_back(draw_one(test_rng, sampler));
  return out;
}

SnapshotSet collect_snapshots(const Mesh& mesh, const FieldLayout& layout,
                              const AffineOperators& ops, const MaterialParams& base,
                              const std::vector<Theta>& thetas, int n_steps, double t_final,
                              int jobs, const std::string& provenance) {
  if (n_steps < 1) throw ConfigError("snapshot collection needs at least one time step");
  if (thetas.empty()) throw ConfigError("snapshot collection needs at least one sample");

  SnapshotSet set;
  set.steps_per_sample = n_steps;
  set.t_final = t_final;
  set.provenance = provenance;
  const int n_samples = static_cast<int>(thetas.size());
  set.u.resize(layout.n_u, static_cast<Eigen::Index>(n_samples) * n_steps);
  set.mu.resize(layout.n_mu, static_cast<Eigen::Index>(n_samples) * n_steps);
  set.columns.resize(static_cast<size_t>(n_samples) * n_steps);

  const double dt = t_final / n_steps;
  std::atomic<int> next{0};
  std::atomic<int> failed{-1};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_samples || failed.load() >= 0) return;
      MaterialParams params = base;
      params.lambda = thetas[i].lambda;
      params.chem_factor = thetas[i].chem_factor;
      try {
        FomSolver solver(mesh, layout, ops, params, dt);
        FomState state = solver.initial_state();
        for (int n = 1; n <= n_steps; ++n) {
          state = solver.step(state);
          const Eigen::Index col = static_cast<Eigen::Index>(i) * n_steps + (n - 1);
          set.u.col(col) = state.u;
          set.mu.col(col) = state.mu;
          set.columns[col] = {i, n, state.time, thetas[i]};
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(i);
        failure = e.what();
        return;
      }
    }
  };

  const int n_workers = std::max(1, std::min(jobs, n_samples));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load() >= 0) {
    std::ostringstream msg;
    msg << "full-order solve failed for sample " << failed.load() << ": " << failure;
    throw SolverError(msg.str());
  }
  return set;
}

SvdResult svd_snapshots(const Eigen::MatrixXd& snapshots, const SpMat* weight) {
  SvdResult out;
  if (snapshots.cols() == 0) throw ConfigError("empty snapshot matrix");

  Eigen::MatrixXd gram;
  if (weight) {
    gram = snapshots.transpose() * ((*weight) * snapshots);
  } else {
    gram = snapshots.transpose() * snapshots;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw SolverError("gram eigendecomposition failed");

  const Eigen::VectorXd evals = eig.eigenvalues();  // ascending
  const double floor = 1e-14 * std::max(evals.cwiseAbs().maxCoeff(), 0.0);
  const Eigen::Index n = evals.size();

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = n - 1; i >= 0; --i)
    if (evals[i] > floor) keep.push_back(i);

  out.singular_values.resize(keep.size());
  out.modes.resize(snapshots.rows(), keep.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    const double sigma = std::sqrt(evals[keep[k]]);
    out.singular_values[k] = sigma;
    out.modes.col(k) = snapshots * (eig.eigenvectors().col(keep[k]) / sigma);
  }
  return out;
}

int truncate(const Eigen::VectorXd& singular_values, double eta) {
  if (!(eta > 0.0) || eta > 1.0) throw ConfigError("retained-energy target must be in (0, 1]");
  if (singular_values.size() == 0) return 0;
  const double total = singular_values.squaredNorm();
  if (total == 0.0) return 0;
  double acc = 0.0;
  for (Eigen::Index r = 0; r < singular_values.size(); ++r) {
    acc += singular_values[r] * singular_values[r];
    if (acc / total >= eta) return static_cast<int>(r + 1);
  }
  return static_cast<int>(singular_values.size());
}

namespace {

// Two-pass modified Gram-Schmidt in the requested inner product. The raw
// gram-eigensolve modes lose orthogonality near the spectral floor; the
// polish keeps the span and restores it to machine precision.
void orthonormalize(Eigen::MatrixXd& modes, const SpMat* weight) {
  auto dot = [weight](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return weight ? double(a.dot((*weight) * b)) : double(a.dot(b));
  };
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < modes.cols(); ++j) {
      for (Eigen::Index k = 0; k < j; ++k)
        modes.col(j) -= dot(modes.col(k), modes.col(j)) * modes.col(k);
      const double norm = std::sqrt(dot(modes.col(j), modes.col(j)));
      if (norm > 0.0) modes.col(j) /= norm;
    }
  }
}

double retained(const Eigen::VectorXd& sv, int r) {
  const double total = sv.squaredNorm();
  if (total == 0.0) return 1.0;
  return sv.head(r).squaredNorm() / total;
}

FieldBasis reduce_field(const Eigen::MatrixXd& snapshots, double eta, int max_rank,
                        const SpMat* weight) {
  const SvdResult svd = svd_snapshots(snapshots, weight);
  int r = truncate(svd.singular_values, eta);
  if (max_rank > 0) r = std::min(r, max_rank);
  FieldBasis basis;
  basis.singular_values = svd.singular_values;
  basis.modes = svd.modes.leftCols(r);
  orthonormalize(basis.modes, weight);
  basis.retained_energy = retained(svd.singular_values, r);
  return basis;
}

FieldBasis reduce_field_nested(const Eigen::MatrixXd& snapshots, int n_samples, int n_steps,
                               double eta_time, double eta_space, int max_rank,
                               const SpMat* weight, std::string_view field_name) {
  // stage one: temporal compression per sample; the compressed block keeps
  // the modes scaled by their singular values so the stacked second moments
  // match the full snapshot matrix when nothing is truncated
  std::vector<Eigen::MatrixXd> compressed(n_samples);
  std::vector<int> kept(n_samples);
  Eigen::Index total_cols = 0;
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::MatrixXd block = snapshots.middleCols(static_cast<Eigen::Index>(i) * n_steps,
                                                       n_steps);
    const SvdResult svd = svd_snapshots(block, weight);
    const int n_t = truncate(svd.singular_values, eta_time);
    if (n_t == 0) {
      std::ostringstream msg;
      msg << "degenerate sample " << i << " (" << field_name
          << "): no temporal modes survive truncation";
      throw SolverError(msg.str());
    }
    kept[i] = n_t;
    compressed[i] =
        svd.modes.leftCols(n_t) * svd.singular_values.head(n_t).asDiagonal();
    total_cols += n_t;
  }

  Eigen::MatrixXd stacked(snapshots.rows(), total_cols);
  Eigen::Index col = 0;
  for (const auto& block : compressed) {
    stacked.middleCols(col, block.cols()) = block;
    col += block.cols();
  }

  FieldBasis basis = reduce_field(stacked, eta_space, max_rank, weight);
  basis.temporal_modes_per_sample = std::move(kept);
  return basis;
}

}  // namespace

ReducedBasis pod(const SnapshotSet& set, double eta, int max_rank, const SpMat* weight_u,
                 const SpMat* weight_mu) {
  ReducedBasis basis;
  basis.method = ReducedBasis::Method::Pod;
  basis.eta_space = eta;
  basis.euclidean = weight_u == nullptr && weight_mu == nullptr;
  basis.u = reduce_field(set.u, eta, max_rank, weight_u);
  basis.mu = reduce_field(set.mu, eta, max_rank, weight_mu);
  return basis;
}

ReducedBasis nested_pod(const SnapshotSet& set, double eta_time, double eta_space, int max_rank,
                        const SpMat* weight_u, const SpMat* weight_mu) {
  const int n_samples = static_cast<int>(set.columns.size()) / set.steps_per_sample;
  ReducedBasis basis;
  basis.method = ReducedBasis::Method::NestedPod;
  basis.eta_space = eta_space;
  basis.eta_time = eta_time;
  basis.euclidean = weight_u == nullptr && weight_mu == nullptr;
  basis.u = reduce_field_nested(set.u, n_samples, set.steps_per_sample, eta_time, eta_space,
                                max_rank, weight_u, "u");
  basis.mu = reduce_field_nested(set.mu, n_samples, set.steps_per_sample, eta_time, eta_space,
                                 max_rank, weight_mu, "mu");
  return basis;
}

FieldBasis head_basis(const FieldBasis& basis, int r) {
  if (r < 1 || r > basis.modes.cols()) throw ConfigError("requested rank exceeds the basis");
  FieldBasis out;
  out.modes = basis.modes.leftCols(r);
  out.singular_values = basis.singular_values;
  out.retained_energy = retained(basis.singular_values, r);
  out.temporal_modes_per_sample = basis.temporal_modes_per_sample;
  return out;
}

namespace {

SpMat mass_matrix(const Mesh& mesh, const FieldLayout& layout, bool quadratic) {
  std::vector<Eigen::Triplet<double>> trip;
  const auto quad = tri_quadrature_deg4();
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& nodes = layout.tri_p2_nodes[t];
    const TriangleFrame frame = triangle_frame(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                               mesh.vertices[tri[2]]);
    for (const auto& q : quad) {
      const double w = q.weight * frame.area;
      if (quadratic) {
        const auto vals = p2_values(q.bary);
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b)
            for (int c = 0; c < 2; ++c)
              trip.emplace_back(layout.u_dof(nodes[a], c), layout.u_dof(nodes[b], c),
                                w * vals[a] * vals[b]);
      } else {
        const auto vals = p1_values(q.bary);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            trip.emplace_back(layout.mu_dof_of_vertex[tri[a]], layout.mu_dof_of_vertex[tri[b]],
                              w * vals[a] * vals[b]);
      }
    }
  }
  const int n = quadratic ? layout.n_u : layout.n_mu;
  SpMat m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

SpMat u_mass_matrix(const Mesh& mesh, const FieldLayout& layout) {
  return mass_matrix(mesh, layout, true);
}

SpMat mu_mass_matrix(const Mesh& mesh, const FieldLayout& layout) {
  return mass_matrix(mesh, layout, false);
}

}  // namespace hmor
