#include "core/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/errors.hpp"
#include "core/rom.hpp"

namespace hmor {

void Observation::validate(double t_final) const {
  if (times.empty()) throw ConfigError("observation set is empty");
  if (times.size() != u.size() || times.size() != mu.size())
    throw ConfigError("observation fields and times are inconsistent");
  for (double t : times)
    if (!(t > 0.0) || t > t_final + 1e-12)
      throw ConfigError("observation times must lie in (0, T_final]");
}

void OptimizerSettings::validate() const {
  if (lambda_bounds[0] > lambda_bounds[1] || chem_bounds[0] > chem_bounds[1])
    throw ConfigError("optimizer bounds are reversed");
  if (initial.lambda < lambda_bounds[0] || initial.lambda > lambda_bounds[1] ||
      initial.chem_factor < chem_bounds[0] || initial.chem_factor > chem_bounds[1])
    throw ConfigError("initial guess lies outside the bounds");
  if (!(ftol > 0.0) || !(gtol > 0.0) || !(eps > 0.0))
    throw ConfigError("optimizer tolerances must be positive");
  if (maxfun < 1 || maxiter < 1 || maxls < 1 || memory < 1)
    throw ConfigError("optimizer iteration limits must be positive");
}

double loss(Theta theta, const Observation& obs, const ForwardModel& forward) {
  const ForwardFields fields = forward(theta);
  if (fields.u.size() != obs.times.size() || fields.mu.size() != obs.times.size())
    throw SolverError("forward model returned the wrong number of observation states");

  // sort by time so the sum is invariant under observation reordering
  std::vector<size_t> order(obs.times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&obs](size_t a, size_t b) { return obs.times[a] < obs.times[b]; });

  double total = 0.0;
  for (size_t i : order) {
    const double u_ref = obs.u[i].norm();
    const double mu_ref = obs.mu[i].norm();
    if (u_ref == 0.0 || mu_ref == 0.0)
      throw ConfigError("degenerate observation: zero-norm field");
    total += (obs.u[i] - fields.u[i]).norm() / u_ref;
    total += (obs.mu[i] - fields.mu[i]).norm() / mu_ref;
  }
  return total;
}

namespace {

struct Box {
  Eigen::Vector2d lo, hi;

  Eigen::Vector2d clip(const Eigen::Vector2d& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }
};

// Projected gradient: zero where the box blocks descent.
Eigen::Vector2d projected_gradient(const Eigen::Vector2d& x, const Eigen::Vector2d& g,
                                   const Box& box) {
  Eigen::Vector2d pg = g;
  for (int k = 0; k < 2; ++k) {
    if (x[k] <= box.lo[k] && g[k] > 0.0) pg[k] = 0.0;
    if (x[k] >= box.hi[k] && g[k] < 0.0) pg[k] = 0.0;
  }
  return pg;
}

}  // namespace

IdentReport minimize_box(const std::function<double(Theta)>& objective,
                         const OptimizerSettings& settings) {
  settings.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const Box box{{settings.lambda_bounds[0], settings.chem_bounds[0]},
                {settings.lambda_bounds[1], settings.chem_bounds[1]}};

  IdentReport report;
  int evals = 0;
  auto f = [&](const Eigen::Vector2d& x) {
    ++evals;
    return objective({x[0], x[1]});
  };

  // forward differences with a relative step, flipped at the upper bound so
  // the probe stays feasible
  auto gradient = [&](const Eigen::Vector2d& x, double fx) {
    Eigen::Vector2d g;
    for (int k = 0; k < 2; ++k) {
      double h = settings.eps * std::max(1.0, std::abs(x[k]));
      Eigen::Vector2d xp = x;
      if (x[k] + h > box.hi[k]) {
        xp[k] = x[k] - h;
        g[k] = (fx - f(xp)) / h;
      } else {
        xp[k] = x[k] + h;
        g[k] = (f(xp) - fx) / h;
      }
    }
    return g;
  };

  Eigen::Vector2d x(settings.initial.lambda, settings.initial.chem_factor);
  double fx = f(x);
  report.loss_trace.push_back(fx);
  Eigen::Vector2d g = gradient(x, fx);

  std::vector<Eigen::Vector2d> s_hist, y_hist;
  report.stop_reason = "maxiter";

  for (int iter = 0; iter < settings.maxiter; ++iter) {
    if (evals >= settings.maxfun) {
      report.stop_reason = "maxfun";
      break;
    }
    const Eigen::Vector2d pg = projected_gradient(x, g, box);
    if (pg.lpNorm<Eigen::Infinity>() <= settings.gtol) {
      report.stop_reason = "gtol";
      break;
    }

    // two-loop recursion over the stored curvature pairs
    Eigen::Vector2d d = -pg;
    if (!s_hist.empty()) {
      std::vector<double> alpha(s_hist.size());
      for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
        const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
        alpha[i] = rho * s_hist[i].dot(d);
        d -= alpha[i] * y_hist[i];
      }
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().dot(y_hist.back());
      d *= gamma;
      for (size_t i = 0; i < s_hist.size(); ++i) {
        const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
        const double beta = rho * y_hist[i].dot(d);
        d += (alpha[i] - beta) * s_hist[i];
      }
      if (d.dot(pg) >= 0.0) d = -pg;  // not a descent direction, reset
    }

    // backtracking line search along the projected path
    double step = 1.0;
    const double slope = g.dot(d);
    Eigen::Vector2d x_new = x;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < settings.maxls; ++ls) {
      if (evals >= settings.maxfun) break;
      const Eigen::Vector2d trial = box.clip(x + step * d);
      if ((trial - x).lpNorm<Eigen::Infinity>() == 0.0) break;
      double f_trial;
      try {
        f_trial = f(trial);
      } catch (const std::exception&) {
        step *= 0.5;  // forward failure: treat as over-step
        continue;
      }
      if (f_trial <= fx + 1e-4 * step * slope || f_trial < fx) {
        x_new = trial;
        f_new = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      report.stop_reason = "line_search";
      break;
    }

    ++report.iterations;
    report.loss_trace.push_back(f_new);

    const double f_drop = fx - f_new;
    Eigen::Vector2d g_new;
    if (evals < settings.maxfun) {
      g_new = gradient(x_new, f_new);
    } else {
      g_new = g;
    }
    const Eigen::Vector2d s = x_new - x;
    const Eigen::Vector2d y = g_new - g;
    if (y.dot(s) > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (static_cast<int>(s_hist.size()) > settings.memory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
      }
    }
    x = x_new;
    fx = f_new;
    g = g_new;

    if (f_drop <= settings.ftol * std::max({std::abs(fx), std::abs(fx + f_drop), 1.0})) {
      report.stop_reason = "ftol";
      break;
    }
  }

  report.optimum = {x[0], x[1]};
  report.final_loss = fx;
  report.evaluations = evals;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

IdentReport identify(const Observation& obs, const ForwardModel& forward,
                     const OptimizerSettings& settings) {
  return minimize_box([&](Theta theta) { return loss(theta, obs, forward); }, settings);
}

GridResult grid_oracle(const Observation& obs, const ForwardModel& forward,
                       const std::vector<double>& lambda_values,
                       const std::vector<double>& chem_values) {
  if (lambda_values.empty() || chem_values.empty()) throw ConfigError("empty oracle grid");
  GridResult result;
  result.lambda_values = lambda_values;
  result.chem_values = chem_values;
  result.losses.resize(lambda_values.size(), chem_values.size());
  result.best_loss = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < lambda_values.size(); ++i) {
    for (size_t j = 0; j < chem_values.size(); ++j) {
      const Theta theta{lambda_values[i], chem_values[j]};
      const double value = loss(theta, obs, forward);
      result.losses(i, j) = value;
      if (value < result.best_loss) {
        result.best_loss = value;
        result.best = theta;
      }
    }
  }
  return result;
}

std::vector<int> observation_step_indices(const std::vector<double>& times, int n_steps,
                                          double t_final) {
  std::vector<int> indices;
  const double dt = t_final / n_steps;
  for (double t : times) {
    const int n = static_cast<int>(std::lround(t / dt));
    if (n < 1 || n > n_steps || std::abs(n * dt - t) > 1e-9 * t_final) {
      std::ostringstream msg;
      msg << "observation time " << t << " does not land on the time grid";
      throw ConfigError(msg.str());
    }
    indices.push_back(n);
  }
  return indices;
}

ForwardModel make_fom_forward(const Mesh& mesh, const FieldLayout& layout,
                              const AffineOperators& ops, const MaterialParams& base, int n_steps,
                              double t_final, const std::vector<double>& times) {
  const std::vector<int> indices = observation_step_indices(times, n_steps, t_final);
  return [&mesh, &layout, &ops, base, n_steps, t_final, indices](Theta theta) {
    MaterialParams params = base;
    params.lambda = theta.lambda;
    params.chem_factor = theta.chem_factor;
    FomSolver solver(mesh, layout, ops, params, t_final / n_steps);
    ForwardFields fields;
    fields.u.resize(indices.size());
    fields.mu.resize(indices.size());
    FomState state = solver.initial_state();
    const int max_index = *std::max_element(indices.begin(), indices.end());
    for (int n = 1; n <= max_index; ++n) {
      state = solver.step(state);
      for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] == n) {
          fields.u[i] = state.u;
          fields.mu[i] = state.mu;
        }
      }
    }
    return fields;
  };
}

ForwardModel make_rom_forward(const ReducedOperators& red, const ReducedBasis& basis, int n_steps,
                              double t_final, const std::vector<double>& times) {
  const std::vector<int> indices = observation_step_indices(times, n_steps, t_final);
  return [&red, &basis, n_steps, t_final, indices](Theta theta) {
    RomSolver solver(red, theta, t_final / n_steps);
    ForwardFields fields;
    fields.u.resize(indices.size());
    fields.mu.resize(indices.size());
    RomState state = solver.initial_state();
    const int max_index = *std::max_element(indices.begin(), indices.end());
    for (int n = 1; n <= max_index; ++n) {
      state = solver.step(state);
      for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] == n) {
          const FomState lifted = lift(state, basis);
          fields.u[i] = lifted.u;
          fields.mu[i] = lifted.mu;
        }
      }
    }
    return fields;
  };
}

}  // namespace hmor
