#include "core/uq.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hmor {

void UqConfig::validate() const {
  if (relative_std < 0.0) throw ConfigError("relative std must be nonnegative");
  if (sample_count < 1) throw ConfigError("sample count must be at least 1");
  if (probes.empty()) throw ConfigError("at least one probe point is required");
  if (lambda_box[0] > lambda_box[1] || chem_box[0] > chem_box[1])
    throw ConfigError("trained box is reversed");
}

std::vector<Theta> draw_samples(const UqConfig& cfg) {
  cfg.validate();
  RngStream rng = RngStream::substream(cfg.seed, 3);
  std::vector<Theta> samples;
  samples.reserve(cfg.sample_count);
  const double std_lambda = cfg.relative_std * cfg.mean.lambda;
  const double std_chem = cfg.relative_std * cfg.mean.chem_factor;
  while (static_cast<int>(samples.size()) < cfg.sample_count) {
    const Theta t{rng.normal(cfg.mean.lambda, std_lambda),
                  rng.normal(cfg.mean.chem_factor, std_chem)};
    if (t.lambda < cfg.lambda_box[0] || t.lambda > cfg.lambda_box[1]) continue;
    if (t.chem_factor < cfg.chem_box[0] || t.chem_factor > cfg.chem_box[1]) continue;
    samples.push_back(t);
  }
  return samples;
}

double qoi_stress_mean(const std::vector<StressSample>& stress, double area, int direction) {
  double sum = 0.0;
  for (const auto& s : stress) sum += s.weight * (direction == 0 ? s.xx : s.yy);
  return sum / area;
}

double qoi_stress_max(const std::vector<StressSample>& stress, int direction) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : stress) best = std::max(best, direction == 0 ? s.xx : s.yy);
  return best;
}

StressEvaluator::StressEvaluator(const Mesh& mesh, const FieldLayout& layout,
                                 const MaterialParams& params) {
  const auto quad = tri_quadrature_deg4();
  const Eigen::Index n_points = static_cast<Eigen::Index>(mesh.triangles.size()) * quad.size();
  weights_.resize(n_points);
  std::vector<Eigen::Triplet<double>> xx, yy, iso;
  pressure_offset_ = params.chem_factor * params.mu_initial;

  Eigen::Index row = 0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& nodes = layout.tri_p2_nodes[t];
    const TriangleFrame frame = triangle_frame(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                               mesh.vertices[tri[2]]);
    for (const auto& q : quad) {
      weights_[row] = q.weight * frame.area;
      const auto gref = p2_ref_gradients(q.bary);
      for (int n = 0; n < 6; ++n) {
        const Vec2 g = frame.grad_to_physical(gref[n]);
        // sigma_xx = (2 + lambda) dux/dx + lambda duy/dy - A (mu - mu0)
        xx.emplace_back(row, layout.u_dof(nodes[n], 0), (2.0 + params.lambda) * g.x);
        xx.emplace_back(row, layout.u_dof(nodes[n], 1), params.lambda * g.y);
        yy.emplace_back(row, layout.u_dof(nodes[n], 0), params.lambda * g.x);
        yy.emplace_back(row, layout.u_dof(nodes[n], 1), (2.0 + params.lambda) * g.y);
      }
      const auto p1v = p1_values(q.bary);
      for (int k = 0; k < 3; ++k)
        iso.emplace_back(row, layout.mu_dof_of_vertex[tri[k]],
                         -params.chem_factor * p1v[k]);
      ++row;
    }
  }
  u_to_xx_.resize(n_points, layout.n_u);
  u_to_xx_.setFromTriplets(xx.begin(), xx.end());
  u_to_yy_.resize(n_points, layout.n_u);
  u_to_yy_.setFromTriplets(yy.begin(), yy.end());
  mu_to_iso_.resize(n_points, layout.n_mu);
  mu_to_iso_.setFromTriplets(iso.begin(), iso.end());
  area_ = weights_.sum();
}

void StressEvaluator::evaluate(const Eigen::VectorXd& u, const Eigen::VectorXd& mu,
                               Eigen::VectorXd& xx, Eigen::VectorXd& yy) const {
  const Eigen::VectorXd iso = mu_to_iso_ * mu;
  xx = u_to_xx_ * u + iso;
  xx.array() += pressure_offset_;
  yy = u_to_yy_ * u + iso;
  yy.array() += pressure_offset_;
}

namespace {

EnsembleStat summarize(const std::vector<const std::vector<double>*>& series) {
  const size_t n_steps = series.front()->size();
  EnsembleStat stat;
  stat.mean.assign(n_steps, 0.0);
  stat.std.assign(n_steps, 0.0);
  stat.min.assign(n_steps, std::numeric_limits<double>::infinity());
  stat.max.assign(n_steps, -std::numeric_limits<double>::infinity());
  const double count = static_cast<double>(series.size());
  for (const auto* s : series)
    for (size_t k = 0; k < n_steps; ++k) {
      stat.mean[k] += (*s)[k];
      stat.min[k] = std::min(stat.min[k], (*s)[k]);
      stat.max[k] = std::max(stat.max[k], (*s)[k]);
    }
  for (size_t k = 0; k < n_steps; ++k) stat.mean[k] /= count;
  for (const auto* s : series)
    for (size_t k = 0; k < n_steps; ++k) {
      const double d = (*s)[k] - stat.mean[k];
      stat.std[k] += d * d;
    }
  for (size_t k = 0; k < n_steps; ++k) stat.std[k] = std::sqrt(stat.std[k] / count);
  return stat;
}

}  // namespace

PropagateResult propagate(const UqConfig& cfg, const Mesh& mesh, const FieldLayout& layout,
                          const ReducedOperators& red, const ReducedBasis& basis,
                          const MaterialParams& base, int n_steps, double t_final, int jobs,
                          const std::optional<std::filesystem::path>& checkpoint_path) {
  cfg.validate();
  PropagateResult result;
  result.samples = draw_samples(cfg);
  result.traces.resize(result.samples.size());

  // probe values of the lifted potential as one row vector per probe point:
  // mu(probe) = (probe row of V_mu) . xi
  std::vector<Eigen::RowVectorXd> probe_rows;
  for (const Vec2 p : cfg.probes) {
    const PointLocation loc = locate_point(mesh, p);
    const auto& tri = mesh.triangles[loc.triangle];
    const auto vals = p1_values(loc.bary);
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(layout.n_mu);
    for (int k = 0; k < 3; ++k) row[layout.mu_dof_of_vertex[tri[k]]] = vals[k];
    probe_rows.push_back(row * basis.mu.modes);
  }

  const StressEvaluator stress(mesh, layout, base);
  const double dt = t_final / n_steps;

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::vector<char> failed(result.samples.size(), 0);
  std::mutex checkpoint_mutex;

  auto run_sample = [&](int i) {
    const Theta theta = result.samples[i];
    QoITrace trace;
    trace.probe_mu.resize(cfg.probes.size());
    try {
      RomSolver solver(red, theta, dt);
      RomState state = solver.initial_state();
      Eigen::VectorXd xx, yy;
      for (int n = 0; n <= n_steps; ++n) {
        if (n > 0) state = solver.step(state);
        trace.times.push_back(state.time);
        for (size_t p = 0; p < probe_rows.size(); ++p)
          trace.probe_mu[p].push_back(probe_rows[p].dot(state.xi_mu));
        const Eigen::VectorXd u_full = basis.u.modes * state.xi_u;
        const Eigen::VectorXd mu_full = basis.mu.modes * state.xi_mu;
        stress.evaluate(u_full, mu_full, xx, yy);
        trace.stress_mean_xx.push_back(stress.weights().dot(xx) / stress.area());
        trace.stress_max_xx.push_back(xx.maxCoeff());
        trace.stress_mean_yy.push_back(stress.weights().dot(yy) / stress.area());
        trace.stress_max_yy.push_back(yy.maxCoeff());
      }
      result.traces[i] = std::move(trace);
    } catch (const std::exception&) {
      failed[i] = 1;
    }
    const int completed = done.fetch_add(1) + 1;
    if (checkpoint_path && completed % cfg.checkpoint_every == 0) {
      std::lock_guard<std::mutex> lock(checkpoint_mutex);
      std::ofstream out(*checkpoint_path);
      out << completed << " of " << result.samples.size() << " samples completed\n";
    }
  };

  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= static_cast<int>(result.samples.size())) return;
      run_sample(i);
    }
  };

  const int n_workers = std::max(1, std::min<int>(jobs, cfg.sample_count));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (size_t i = 0; i < failed.size(); ++i)
    if (failed[i]) result.skipped.push_back(static_cast<int>(i));
  if (result.skipped.size() * 100 > result.samples.size())
    throw SolverError("more than 1% of the ensemble solves failed");

  // deterministic merge: drop failed samples, keep sample order
  std::vector<const QoITrace*> ok;
  for (size_t i = 0; i < result.traces.size(); ++i)
    if (!failed[i]) ok.push_back(&result.traces[i]);
  if (ok.empty()) throw SolverError("every ensemble solve failed");

  result.summary.times = ok.front()->times;
  auto collect = [&ok](auto member) {
    std::vector<const std::vector<double>*> series;
    series.reserve(ok.size());
    for (const auto* t : ok) series.push_back(&(t->*member));
    return summarize(series);
  };
  result.summary.stress_mean_xx = collect(&QoITrace::stress_mean_xx);
  result.summary.stress_max_xx = collect(&QoITrace::stress_max_xx);
  result.summary.stress_mean_yy = collect(&QoITrace::stress_mean_yy);
  result.summary.stress_max_yy = collect(&QoITrace::stress_max_yy);
  for (size_t p = 0; p < cfg.probes.size(); ++p) {
    std::vector<const std::vector<double>*> series;
    series.reserve(ok.size());
    for (const auto* t : ok) series.push_back(&t->probe_mu[p]);
    result.summary.probe_mu.push_back(summarize(series));
  }

  if (checkpoint_path) std::filesystem::remove(*checkpoint_path);
  return result;
}

}  // namespace hmor
