#include "core/fom.hpp"

#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace hmor {

void MaterialParams::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(chem_factor > 0.0)) throw ConfigError("chem factor must be positive");
  if (alpha_robin < 0.0) throw ConfigError("robin coefficient must be nonnegative");
}

NormalizationResult normalize(const DimensionalParams& dim) {
  if (!(dim.length_m > 0) || !(dim.kT_joule > 0) || !(dim.fluid_molecular_volume_m3 > 0) ||
      !(dim.diffusivity_m2_s > 0) || !(dim.shear_modulus_pa > 0) || !(dim.lame_drained_pa > 0))
    throw ConfigError("dimensional parameters must all be positive");
  NormalizationResult out;
  out.lambda = dim.lame_drained_pa / dim.shear_modulus_pa;
  out.chem_factor = dim.kT_joule / (dim.shear_modulus_pa * dim.fluid_molecular_volume_m3);
  out.seconds_per_time_unit = dim.length_m * dim.length_m / dim.diffusivity_m2_s;
  return out;
}

AffineOperators assemble_affine(const Mesh& mesh, const FieldLayout& layout,
                                const MaterialParams& params) {
  params.validate();

  AffineOperators ops;
  ops.n_u = layout.n_u;
  ops.n_mu = layout.n_mu;

  using T = Eigen::Triplet<double>;
  std::vector<T> shear, vol, press, dil, diff;
  const auto quad = tri_quadrature_deg4();
  const auto p1_grad_ref = p1_ref_gradients();

  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& nodes = layout.tri_p2_nodes[t];
    const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    const TriangleFrame frame = triangle_frame(p0, p1, p2);

    std::array<Vec2, 3> gp1;
    for (int k = 0; k < 3; ++k) gp1[k] = frame.grad_to_physical(p1_grad_ref[k]);

    std::array<int, 12> udof;
    for (int n = 0; n < 6; ++n) {
      udof[2 * n] = layout.u_dof(nodes[n], 0);
      udof[2 * n + 1] = layout.u_dof(nodes[n], 1);
    }
    std::array<int, 3> mdof;
    for (int k = 0; k < 3; ++k) mdof[k] = layout.mu_dof_of_vertex[tri[k]];

    double ke_shear[12][12] = {};
    double ke_vol[12][12] = {};
    double ke_press[12][3] = {};
    double ke_diff[3][3] = {};

    for (const auto& q : quad) {
      const double w = q.weight * frame.area;
      const auto gp2_ref = p2_ref_gradients(q.bary);
      std::array<Vec2, 6> gp2;
      for (int n = 0; n < 6; ++n) gp2[n] = frame.grad_to_physical(gp2_ref[n]);
      const auto p1v = p1_values(q.bary);

      // symmetric-gradient components per displacement dof:
      // dof (n, 0): eps = [Nx, Ny/2; Ny/2, 0], dof (n, 1): [0, Nx/2; Nx/2, Ny]
      std::array<double, 12> exx, eyy, exy, divv;
      for (int n = 0; n < 6; ++n) {
        exx[2 * n] = gp2[n].x;
        eyy[2 * n] = 0.0;
        exy[2 * n] = 0.5 * gp2[n].y;
        divv[2 * n] = gp2[n].x;
        exx[2 * n + 1] = 0.0;
        eyy[2 * n + 1] = gp2[n].y;
        exy[2 * n + 1] = 0.5 * gp2[n].x;
        divv[2 * n + 1] = gp2[n].y;
      }

      for (int a = 0; a < 12; ++a) {
        for (int b = 0; b < 12; ++b) {
          ke_shear[a][b] += w * (exx[a] * exx[b] + eyy[a] * eyy[b] + 2.0 * exy[a] * exy[b]);
          ke_vol[a][b] += w * divv[a] * divv[b];
        }
        for (int k = 0; k < 3; ++k) ke_press[a][k] -= w * p1v[k] * divv[a];
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          ke_diff[i][j] += w * (gp1[i].x * gp1[j].x + gp1[i].y * gp1[j].y);
    }

    for (int a = 0; a < 12; ++a) {
      for (int b = 0; b < 12; ++b) {
        shear.emplace_back(udof[a], udof[b], ke_shear[a][b]);
        vol.emplace_back(udof[a], udof[b], ke_vol[a][b]);
      }
      for (int k = 0; k < 3; ++k) {
        press.emplace_back(udof[a], mdof[k], ke_press[a][k]);
        // rate-of-dilation row: same integrand with opposite sign convention
        dil.emplace_back(mdof[k], udof[a], -ke_press[a][k]);
      }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) diff.emplace_back(mdof[i], mdof[j], ke_diff[i][j]);
  }

  ops.shear_stiffness.resize(layout.n_u, layout.n_u);
  ops.shear_stiffness.setFromTriplets(shear.begin(), shear.end());
  ops.volumetric_stiffness.resize(layout.n_u, layout.n_u);
  ops.volumetric_stiffness.setFromTriplets(vol.begin(), vol.end());
  ops.pressure_coupling.resize(layout.n_u, layout.n_mu);
  ops.pressure_coupling.setFromTriplets(press.begin(), press.end());
  ops.dilation_coupling.resize(layout.n_mu, layout.n_u);
  ops.dilation_coupling.setFromTriplets(dil.begin(), dil.end());
  ops.diffusion_stiffness.resize(layout.n_mu, layout.n_mu);
  ops.diffusion_stiffness.setFromTriplets(diff.begin(), diff.end());

  // boundary exchange: + alpha * mu on the left-hand side drives the field
  // toward the ambient value on the right-hand side
  std::vector<T> robin;
  ops.robin_load = Eigen::VectorXd::Zero(layout.n_mu);
  const auto equad = edge_quadrature();
  for (const auto& e : layout.robin_edges) {
    const Vec2 a = mesh.vertices[e.v0], b = mesh.vertices[e.v1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int i0 = layout.mu_dof_of_vertex[e.v0], i1 = layout.mu_dof_of_vertex[e.v1];
    double m00 = 0, m01 = 0, m11 = 0, f0 = 0, f1 = 0;
    for (const auto& q : equad) {
      const double w = q.weight * len;
      const double n0 = 1.0 - q.t, n1 = q.t;
      m00 += w * n0 * n0;
      m01 += w * n0 * n1;
      m11 += w * n1 * n1;
      f0 += w * n0;
      f1 += w * n1;
    }
    const double alpha = params.alpha_robin;
    robin.emplace_back(i0, i0, alpha * m00);
    robin.emplace_back(i0, i1, alpha * m01);
    robin.emplace_back(i1, i0, alpha * m01);
    robin.emplace_back(i1, i1, alpha * m11);
    ops.robin_load[i0] += alpha * params.mu_ambient * f0;
    ops.robin_load[i1] += alpha * params.mu_ambient * f1;
  }
  ops.robin_mass.resize(layout.n_mu, layout.n_mu);
  ops.robin_mass.setFromTriplets(robin.begin(), robin.end());

  ops.body_load = Eigen::VectorXd::Zero(layout.n_u);
  if (params.body_force.x != 0.0 || params.body_force.y != 0.0) {
    const Vec2 f = params.body_force;
    ops.body_load = assemble_u_load(mesh, layout, [f](Vec2) { return f; });
  }

  ops.pressure_shift = ops.pressure_coupling * Eigen::VectorXd::Ones(layout.n_mu);
  return ops;
}

namespace {

std::vector<int> constrained_dofs(const FieldLayout& layout) {
  std::vector<int> out;
  out.reserve(layout.dirichlet.size());
  for (const auto& bc : layout.dirichlet) out.push_back(bc.dof);
  return out;
}

// Monolithic matrix for the given weights; displacement block first.
SpMat monolithic_matrix(const AffineOperators& ops, const MaterialParams& p, double dt) {
  const int n = ops.n_u + ops.n_mu;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(ops.shear_stiffness.nonZeros() * 2 + ops.pressure_coupling.nonZeros() * 2 +
               ops.diffusion_stiffness.nonZeros() + ops.robin_mass.nonZeros());
  auto add = [&trip](const SpMat& m, double w, int row0, int col0) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it)
        trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                          w * it.value());
  };
  add(ops.shear_stiffness, 2.0, 0, 0);
  add(ops.volumetric_stiffness, p.lambda, 0, 0);
  add(ops.pressure_coupling, p.chem_factor, 0, ops.n_u);
  add(ops.dilation_coupling, 1.0, ops.n_u, 0);
  add(ops.diffusion_stiffness, dt, ops.n_u, ops.n_u);
  add(ops.robin_mass, dt, ops.n_u, ops.n_u);
  SpMat m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// Extract the columns at the constrained dofs, then zero those rows/columns
// and put ones on the diagonal.
SpMat eliminate(SpMat& m, const std::vector<int>& constrained) {
  const int n = static_cast<int>(m.rows());
  std::vector<char> is_constrained(n, 0);
  std::vector<int> col_slot(n, -1);
  for (size_t c = 0; c < constrained.size(); ++c) {
    is_constrained[constrained[c]] = 1;
    col_slot[constrained[c]] = static_cast<int>(c);
  }

  std::vector<Eigen::Triplet<double>> cols, kept;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (col_slot[c] >= 0 && !is_constrained[r]) cols.emplace_back(r, col_slot[c], it.value());
      if (!is_constrained[r] && !is_constrained[c]) kept.emplace_back(r, c, it.value());
    }
  }
  for (int d : constrained) kept.emplace_back(d, d, 1.0);

  SpMat dircols(n, static_cast<int>(constrained.size()));
  dircols.setFromTriplets(cols.begin(), cols.end());
  m.setZero();
  m.setFromTriplets(kept.begin(), kept.end());
  return dircols;
}

}  // namespace

FomSolver::FomSolver(const Mesh& mesh, const FieldLayout& layout, const AffineOperators& ops,
                     const MaterialParams& params, double dt, TransientSources sources)
    : mesh_(mesh),
      layout_(layout),
      ops_(ops),
      params_(params),
      dt_(dt),
      sources_(std::move(sources)),
      constrained_(constrained_dofs(layout)) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");

  // coordinate and component of each constrained dof, for value callbacks
  std::vector<int> node_of_dof(layout.n_u / 2, -1);
  for (int n = 0; n < static_cast<int>(layout.u_dof_of_node.size()); ++n)
    node_of_dof[layout.u_dof_of_node[n] / 2] = n;
  std::vector<int> vertex_of_mu(layout.n_mu, -1);
  for (int v = 0; v < static_cast<int>(layout.mu_dof_of_vertex.size()); ++v)
    vertex_of_mu[layout.mu_dof_of_vertex[v]] = v;
  constrained_points_.reserve(constrained_.size());
  for (int dof : constrained_) {
    if (dof < layout.n_u)
      constrained_points_.emplace_back(layout.p2_nodes[node_of_dof[dof / 2]], dof % 2);
    else
      constrained_points_.emplace_back(mesh.vertices[vertex_of_mu[dof - layout.n_u]], 2);
  }

  SpMat k = monolithic_matrix(ops, params, dt);
  dirichlet_columns_ = eliminate(k, constrained_);
  k.makeCompressed();
  lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
  lu_->compute(k);
  if (lu_->info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "singular time-step matrix: " << lu_->lastErrorMessage();
    throw SolverError(msg.str());
  }

  // momentum-only system for the consistent initial displacement
  SpMat kuu = 2.0 * ops.shear_stiffness + params.lambda * ops.volumetric_stiffness;
  std::vector<int> u_constrained;
  for (int d : constrained_)
    if (d < layout.n_u) u_constrained.push_back(d);
  momentum_dirichlet_columns_ = eliminate(kuu, u_constrained);
  kuu.makeCompressed();
  momentum_lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
  momentum_lu_->compute(kuu);
  if (momentum_lu_->info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "singular momentum matrix: " << momentum_lu_->lastErrorMessage();
    throw SolverError(msg.str());
  }
}

Eigen::VectorXd FomSolver::dirichlet_values(double time) const {
  Eigen::VectorXd vals(constrained_.size());
  for (size_t i = 0; i < constrained_.size(); ++i) {
    if (sources_.dirichlet_value) {
      const auto& [point, component] = constrained_points_[i];
      vals[i] = sources_.dirichlet_value(point, component, time);
    } else {
      vals[i] = layout_.dirichlet[i].value;
    }
  }
  return vals;
}

FomState FomSolver::initial_state() const {
  FomState s;
  s.time = 0.0;
  s.mu = Eigen::VectorXd::Constant(layout_.n_mu, params_.mu_initial);

  // stress-free start: solve the momentum block with mu held at its initial
  // value, where the pressure term cancels exactly
  Eigen::VectorXd rhs = ops_.body_load;
  if (sources_.body_force) {
    const auto& f = sources_.body_force;
    rhs += assemble_u_load(mesh_, layout_, [&f](Vec2 p) { return f(p, 0.0); });
  }
  const Eigen::VectorXd vals = dirichlet_values(0.0);
  Eigen::VectorXd uv(momentum_dirichlet_columns_.cols());
  {
    int slot = 0;
    for (size_t i = 0; i < constrained_.size(); ++i)
      if (constrained_[i] < layout_.n_u) uv[slot++] = vals[i];
  }
  rhs -= momentum_dirichlet_columns_ * uv;
  {
    int slot = 0;
    for (size_t i = 0; i < constrained_.size(); ++i)
      if (constrained_[i] < layout_.n_u) rhs[constrained_[i]] = uv[slot++];
  }
  s.u = momentum_lu_->solve(rhs);
  return s;
}

FomState FomSolver::step(const FomState& state) const {
  const double t_next = state.time + dt_;

  Eigen::VectorXd rhs(layout_.n_total());
  rhs.head(layout_.n_u) =
      ops_.body_load + params_.chem_factor * params_.mu_initial * ops_.pressure_shift;
  rhs.tail(layout_.n_mu) = dt_ * ops_.robin_load + ops_.dilation_coupling * state.u;

  if (sources_.body_force) {
    const auto& f = sources_.body_force;
    rhs.head(layout_.n_u) +=
        assemble_u_load(mesh_, layout_, [&f, t_next](Vec2 p) { return f(p, t_next); });
  }
  if (sources_.mass_source) {
    const auto& src = sources_.mass_source;
    rhs.tail(layout_.n_mu) +=
        dt_ * assemble_mu_load(mesh_, layout_, [&src, t_next](Vec2 p) { return src(p, t_next); });
  }

  const Eigen::VectorXd vals = dirichlet_values(t_next);
  rhs -= dirichlet_columns_ * vals;
  for (size_t i = 0; i < constrained_.size(); ++i) rhs[constrained_[i]] = vals[i];

  const Eigen::VectorXd x = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success) throw SolverError("time-step solve failed");

  FomState next;
  next.time = t_next;
  next.u = x.head(layout_.n_u);
  next.mu = x.tail(layout_.n_mu);
  return next;
}

Trajectory FomSolver::solve(int n_steps) const {
  if (n_steps < 0) throw ConfigError("step count must be nonnegative");
  Trajectory traj;
  traj.dt = dt_;
  traj.states.reserve(n_steps + 1);
  traj.states.push_back(initial_state());
  for (int n = 0; n < n_steps; ++n) traj.states.push_back(step(traj.states.back()));
  return traj;
}

Trajectory solve_fom(const Mesh& mesh, const FieldLayout& layout, const AffineOperators& ops,
                     const MaterialParams& params, int n_steps, double t_final) {
  if (n_steps == 0) {
    FomSolver solver(mesh, layout, ops, params, 1.0);
    Trajectory traj;
    traj.dt = 0.0;
    traj.states.push_back(solver.initial_state());
    return traj;
  }
  FomSolver solver(mesh, layout, ops, params, t_final / n_steps);
  return solver.solve(n_steps);
}

std::vector<StressSample> stress_field(const Mesh& mesh, const FieldLayout& layout,
                                       const FomState& state, const MaterialParams& params) {
  std::vector<StressSample> out;
  const auto quad = tri_quadrature_deg4();
  out.reserve(mesh.triangles.size() * quad.size());

  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& nodes = layout.tri_p2_nodes[t];
    const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    const TriangleFrame frame = triangle_frame(p0, p1, p2);

    for (const auto& q : quad) {
      const auto gp2_ref = p2_ref_gradients(q.bary);
      double ux_x = 0, ux_y = 0, uy_x = 0, uy_y = 0;
      for (int n = 0; n < 6; ++n) {
        const Vec2 g = frame.grad_to_physical(gp2_ref[n]);
        const double vx = state.u[layout.u_dof(nodes[n], 0)];
        const double vy = state.u[layout.u_dof(nodes[n], 1)];
        ux_x += vx * g.x;
        ux_y += vx * g.y;
        uy_x += vy * g.x;
        uy_y += vy * g.y;
      }
      const auto p1v = p1_values(q.bary);
      double mu_q = 0;
      for (int k = 0; k < 3; ++k) mu_q += p1v[k] * state.mu[layout.mu_dof_of_vertex[tri[k]]];

      const double exx = ux_x, eyy = uy_y, exy = 0.5 * (ux_y + uy_x);
      const double trace = exx + eyy;
      const double pressure = params.chem_factor * (mu_q - params.mu_initial);

      StressSample s;
      s.point = barycentric_point(p0, p1, p2, q.bary);
      s.weight = q.weight * frame.area;
      s.xx = 2.0 * exx + params.lambda * trace - pressure;
      s.yy = 2.0 * eyy + params.lambda * trace - pressure;
      s.xy = 2.0 * exy;
      out.push_back(s);
    }
  }
  return out;
}

double eval_mu(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu,
               const PointLocation& loc) {
  const auto& tri = mesh.triangles[loc.triangle];
  const auto vals = p1_values(loc.bary);
  double out = 0.0;
  for (int k = 0; k < 3; ++k) out += vals[k] * mu[layout.mu_dof_of_vertex[tri[k]]];
  return out;
}

Vec2 eval_u(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& u,
            const PointLocation& loc) {
  const auto& nodes = layout.tri_p2_nodes[loc.triangle];
  const auto vals = p2_values(loc.bary);
  Vec2 out{0.0, 0.0};
  for (int n = 0; n < 6; ++n) {
    out.x += vals[n] * u[layout.u_dof(nodes[n], 0)];
    out.y += vals[n] * u[layout.u_dof(nodes[n], 1)];
  }
  return out;
}

Vec2 eval_grad_mu(const Mesh& mesh, const FieldLayout& layout, const Eigen::VectorXd& mu,
                  const PointLocation& loc) {
  const auto& tri = mesh.triangles[loc.triangle];
  const TriangleFrame frame = triangle_frame(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                             mesh.vertices[tri[2]]);
  const auto grads = p1_ref_gradients();
  Vec2 out{0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    const Vec2 g = frame.grad_to_physical(grads[k]);
    const double v = mu[layout.mu_dof_of_vertex[tri[k]]];
    out.x += v * g.x;
    out.y += v * g.y;
  }
  return out;
}

std::array<Vec2, 2> eval_grad_u(const Mesh& mesh, const FieldLayout& layout,
                                const Eigen::VectorXd& u, const PointLocation& loc) {
  const auto& tri = mesh.triangles[loc.triangle];
  const auto& nodes = layout.tri_p2_nodes[loc.triangle];
  const TriangleFrame frame = triangle_frame(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                             mesh.vertices[tri[2]]);
  const auto gref = p2_ref_gradients(loc.bary);
  std::array<Vec2, 2> out{Vec2{0, 0}, Vec2{0, 0}};  // gradient rows of (ux, uy)
  for (int n = 0; n < 6; ++n) {
    const Vec2 g = frame.grad_to_physical(gref[n]);
    const double vx = u[layout.u_dof(nodes[n], 0)];
    const double vy = u[layout.u_dof(nodes[n], 1)];
    out[0].x += vx * g.x;
    out[0].y += vx * g.y;
    out[1].x += vy * g.x;
    out[1].y += vy * g.y;
  }
  return out;
}

std::vector<ProbeSample> probe(const Mesh& mesh, const FieldLayout& layout, const FomState& state,
                               const std::vector<Vec2>& points) {
  std::vector<ProbeSample> out;
  out.reserve(points.size());
  for (const Vec2 p : points) {
    const PointLocation loc = locate_point(mesh, p);
    ProbeSample s;
    s.point = p;
    s.mu = eval_mu(mesh, layout, state.mu, loc);
    s.u = eval_u(mesh, layout, state.u, loc);
    out.push_back(s);
  }
  return out;
}

Eigen::VectorXd assemble_u_load(const Mesh& mesh, const FieldLayout& layout,
                                const std::function<Vec2(Vec2)>& f) {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(layout.n_u);
  const auto quad = tri_quadrature_deg4();
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& nodes = layout.tri_p2_nodes[t];
    const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    const TriangleFrame frame = triangle_frame(p0, p1, p2);
    for (const auto& q : quad) {
      const double w = q.weight * frame.area;
      const Vec2 fx = f(barycentric_point(p0, p1, p2, q.bary));
      const auto vals = p2_values(q.bary);
      for (int n = 0; n < 6; ++n) {
        load[layout.u_dof(nodes[n], 0)] += w * vals[n] * fx.x;
        load[layout.u_dof(nodes[n], 1)] += w * vals[n] * fx.y;
      }
    }
  }
  return load;
}

Eigen::VectorXd assemble_mu_load(const Mesh& mesh, const FieldLayout& layout,
                                 const std::function<double(Vec2)>& s) {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(layout.n_mu);
  const auto quad = tri_quadrature_deg4();
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    const TriangleFrame frame = triangle_frame(p0, p1, p2);
    for (const auto& q : quad) {
      const double w = q.weight * frame.area;
      const double sv = s(barycentric_point(p0, p1, p2, q.bary));
      const auto vals = p1_values(q.bary);
      for (int k = 0; k < 3; ++k) load[layout.mu_dof_of_vertex[tri[k]]] += w * vals[k] * sv;
    }
  }
  return load;
}

}  // namespace hmor
