#include "core/rom.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "core/errors.hpp"

namespace hmor {

namespace {

// Zero the rows/columns of the constrained dofs; the unit diagonal is
// projected separately so the parameter weighting stays affine.
SpMat eliminated(const SpMat& m, const std::vector<char>& row_mask,
                 const std::vector<char>& col_mask) {
  std::vector<Eigen::Triplet<double>> kept;
  kept.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (!row_mask[it.row()] && !col_mask[it.col()]) kept.emplace_back(it.row(), it.col(), it.value());
  SpMat out(m.rows(), m.cols());
  out.setFromTriplets(kept.begin(), kept.end());
  return out;
}

}  // namespace

ReducedOperators project(const AffineOperators& ops, const FieldLayout& layout,
                         const ReducedBasis& basis, const MaterialParams& params,
                         const FomState& initial) {
  const Eigen::MatrixXd& vu = basis.u.modes;
  const Eigen::MatrixXd& vmu = basis.mu.modes;
  if (vu.rows() != ops.n_u || vmu.rows() != ops.n_mu)
    throw ConfigError("basis dimensions do not match the operators");

  // euclidean-orthonormal basis: the reduced Gram matrix is the identity and
  // is omitted from the online system
  if (basis.euclidean) {
    auto gram_err = [](const Eigen::MatrixXd& v) {
      if (v.cols() == 0) return 0.0;
      return (v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols()))
          .cwiseAbs()
          .maxCoeff();
    };
    if (gram_err(vu) > 1e-8 || gram_err(vmu) > 1e-8)
      throw SolverError("reduced basis is not orthonormal; projection would be inconsistent");
  }

  std::vector<char> u_mask(ops.n_u, 0), mu_mask(ops.n_mu, 0);
  std::vector<int> u_constrained, mu_constrained;
  for (const auto& bc : layout.dirichlet) {
    if (bc.dof < ops.n_u) {
      u_mask[bc.dof] = 1;
      u_constrained.push_back(bc.dof);
    } else {
      mu_mask[bc.dof - ops.n_u] = 1;
      mu_constrained.push_back(bc.dof - ops.n_u);
    }
  }

  ReducedOperators red;
  red.r_u = static_cast<int>(vu.cols());
  red.r_mu = static_cast<int>(vmu.cols());

  const SpMat a1 = eliminated(ops.shear_stiffness, u_mask, u_mask);
  const SpMat a2 = eliminated(ops.volumetric_stiffness, u_mask, u_mask);
  const SpMat a3 = eliminated(ops.pressure_coupling, u_mask, mu_mask);
  const SpMat c1 = eliminated(ops.dilation_coupling, mu_mask, u_mask);
  const SpMat c2 = eliminated(ops.diffusion_stiffness, mu_mask, mu_mask);
  const SpMat c3 = eliminated(ops.robin_mass, mu_mask, mu_mask);

  red.shear = vu.transpose() * (a1 * vu);
  red.volumetric = vu.transpose() * (a2 * vu);
  red.coupling = vu.transpose() * (a3 * vmu);
  red.dilation = vmu.transpose() * (c1 * vu);
  red.diffusion = vmu.transpose() * (c2 * vmu);
  red.robin = vmu.transpose() * (c3 * vmu);

  red.bc_identity_u = Eigen::MatrixXd::Zero(red.r_u, red.r_u);
  for (int d : u_constrained) red.bc_identity_u += vu.row(d).transpose() * vu.row(d);
  red.bc_identity_mu = Eigen::MatrixXd::Zero(red.r_mu, red.r_mu);
  for (int d : mu_constrained) red.bc_identity_mu += vmu.row(d).transpose() * vmu.row(d);

  Eigen::VectorXd body = ops.body_load;
  for (int d : u_constrained) body[d] = 0.0;  // homogeneous constraints only
  red.body_load = vu.transpose() * body;
  Eigen::VectorXd robin_load = ops.robin_load;
  for (int d : mu_constrained) robin_load[d] = 0.0;
  red.robin_load = vmu.transpose() * robin_load;
  red.pressure_shift = vu.transpose() * (a3 * Eigen::VectorXd::Ones(ops.n_mu));

  if (basis.euclidean || vu.cols() == 0) {
    red.initial_u = vu.transpose() * initial.u;
  } else {
    red.initial_u = (vu.transpose() * vu).ldlt().solve(vu.transpose() * initial.u);
  }
  if (basis.euclidean || vmu.cols() == 0) {
    red.initial_mu = vmu.transpose() * initial.mu;
  } else {
    red.initial_mu = (vmu.transpose() * vmu).ldlt().solve(vmu.transpose() * initial.mu);
  }
  red.mu_initial = params.mu_initial;
  red.mu_ambient = params.mu_ambient;
  red.alpha_robin = params.alpha_robin;
  return red;
}

RomSolver::RomSolver(const ReducedOperators& red, Theta theta, double dt)
    : red_(red), theta_(theta), dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const int n = red.n_reduced();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  k.topLeftCorner(red.r_u, red.r_u) =
      2.0 * red.shear + theta.lambda * red.volumetric + red.bc_identity_u;
  k.topRightCorner(red.r_u, red.r_mu) = theta.chem_factor * red.coupling;
  k.bottomLeftCorner(red.r_mu, red.r_u) = red.dilation;
  k.bottomRightCorner(red.r_mu, red.r_mu) =
      dt * (red.diffusion + red.robin) + red.bc_identity_mu;

  lu_.compute(k);
  // PartialPivLU has no rank signal; probe with a solve
  const Eigen::VectorXd probe = lu_.solve(Eigen::VectorXd::Ones(n));
  if (!probe.allFinite()) throw SolverError("reduced step matrix is singular");

  dilation_ = red.dilation;
  rhs_static_ = Eigen::VectorXd::Zero(n);
  rhs_static_.head(red.r_u) =
      red.body_load + theta.chem_factor * red.mu_initial * red.pressure_shift;
  rhs_static_.tail(red.r_mu) = dt * red.robin_load;
}

RomState RomSolver::initial_state() const {
  return {red_.initial_u, red_.initial_mu, 0.0};
}

RomState RomSolver::step(const RomState& state) const {
  Eigen::VectorXd rhs = rhs_static_;
  rhs.tail(red_.r_mu) += dilation_ * state.xi_u;
  const Eigen::VectorXd x = lu_.solve(rhs);
  RomState next;
  next.time = state.time + dt_;
  next.xi_u = x.head(red_.r_u);
  next.xi_mu = x.tail(red_.r_mu);
  return next;
}

std::vector<RomState> RomSolver::solve(int n_steps) const {
  std::vector<RomState> states;
  states.reserve(n_steps + 1);
  states.push_back(initial_state());
  for (int n = 0; n < n_steps; ++n) states.push_back(step(states.back()));
  return states;
}

bool theta_in_box(Theta theta, const std::array<double, 2>& lambda_range,
                  const std::array<double, 2>& chem_range) {
  return theta.lambda >= lambda_range[0] && theta.lambda <= lambda_range[1] &&
         theta.chem_factor >= chem_range[0] && theta.chem_factor <= chem_range[1];
}

FomState lift(const RomState& state, const ReducedBasis& basis) {
  FomState full;
  full.time = state.time;
  full.u = basis.u.modes * state.xi_u;
  full.mu = basis.mu.modes * state.xi_mu;
  return full;
}

std::vector<FomState> lift_all(const std::vector<RomState>& states, const ReducedBasis& basis) {
  std::vector<FomState> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(lift(s, basis));
  return out;
}

SpeedupReport speedup_report(const Mesh& mesh, const FieldLayout& layout,
                             const AffineOperators& ops, const MaterialParams& params,
                             const ReducedOperators& red, Theta theta, int n_steps, double t_final,
                             int repetitions) {
  using clock = std::chrono::steady_clock;
  repetitions = std::max(repetitions, 5);
  const double dt = t_final / n_steps;

  MaterialParams p = params;
  p.lambda = theta.lambda;
  p.chem_factor = theta.chem_factor;

  std::vector<double> fom_times, rom_times;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto t0 = clock::now();
    FomSolver solver(mesh, layout, ops, p, dt);
    FomState state = solver.initial_state();
    for (int n = 0; n < n_steps; ++n) state = solver.step(state);
    fom_times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  // the reduced solve is orders of magnitude cheaper; time batches to stay
  // above the clock resolution
  const int batch = 32;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto t0 = clock::now();
    for (int b = 0; b < batch; ++b) {
      RomSolver solver(red, theta, dt);
      RomState state = solver.initial_state();
      for (int n = 0; n < n_steps; ++n) state = solver.step(state);
    }
    rom_times.push_back(std::chrono::duration<double>(clock::now() - t0).count() / batch);
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  SpeedupReport report;
  report.fom_seconds = median(fom_times);
  report.rom_seconds = median(rom_times);
  report.ratio = report.fom_seconds / report.rom_seconds;
  report.repetitions = repetitions;
  return report;
}

}  // namespace hmor
