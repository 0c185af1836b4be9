#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "core/errors.hpp"

namespace hmor {

namespace {

constexpr double kCoordTol = 1e-12;

bool near(double a, double b) { return std::abs(a - b) < kCoordTol; }

}  // namespace

ScenarioSpec ScenarioSpec::square(int density) {
  ScenarioSpec s;
  s.id = ScenarioId::Square;
  s.density = density;
  s.width = 1.0;
  s.height = 1.0;
  return s;
}

ScenarioSpec ScenarioSpec::bar(int density, double exposed_fraction) {
  ScenarioSpec s;
  s.id = ScenarioId::Bar;
  s.density = density;
  s.width = 0.5;
  s.height = 4.0;
  s.exposed_fraction = exposed_fraction;
  return s;
}

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Vec2 a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t) sum += triangle_area(t);
  return sum;
}

Mesh build_mesh(const ScenarioSpec& spec) {
  if (spec.density < 1) throw ConfigError("mesh density must be at least 1");
  if (spec.width <= 0.0 || spec.height <= 0.0)
    throw ConfigError("domain extent must be positive");
  if (spec.exposed_fraction <= 0.0 || spec.exposed_fraction > 1.0)
    throw ConfigError("exposed fraction must lie in (0, 1]");

  const int nx = spec.density;
  const double h = spec.width / nx;
  const int ny = static_cast<int>(std::lround(spec.height / h));
  if (ny < 1) throw ConfigError("domain aspect ratio incompatible with density");

  Mesh mesh;
  mesh.width = spec.width;
  mesh.height = spec.height;
  mesh.cells_x = nx;
  mesh.cells_y = ny;

  const double hy = spec.height / ny;
  mesh.vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.push_back({i * h, j * hy});

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  mesh.triangles.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      // split along the a-c diagonal, both triangles counterclockwise
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }

  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), EdgeTag::Bottom});
    mesh.boundary_edges.push_back({vid(i, ny), vid(i + 1, ny), EdgeTag::Top});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), EdgeTag::Right});
    mesh.boundary_edges.push_back({vid(0, j), vid(0, j + 1), EdgeTag::Left});
  }
  return mesh;
}

namespace {

struct NodeOrder {
  bool operator()(const Vec2& a, const Vec2& b) const {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  }
};

// Shared skeleton: quadratic node list, per-triangle node ids and the
// deterministic dof numbering for both fields.
void build_dof_maps(const Mesh& mesh, FieldLayout& layout) {
  const int n_vertices = static_cast<int>(mesh.vertices.size());
  layout.p2_nodes = mesh.vertices;

  std::map<std::pair<int, int>, int> midpoint_of_edge;
  layout.tri_p2_nodes.resize(mesh.triangles.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    std::array<int, 6> nodes;
    nodes[0] = tri[0];
    nodes[1] = tri[1];
    nodes[2] = tri[2];
    // midpoint opposite local vertex k sits between the other two vertices
    const std::array<std::pair<int, int>, 3> pairs = {
        std::pair{tri[1], tri[2]}, std::pair{tri[0], tri[2]}, std::pair{tri[0], tri[1]}};
    for (int k = 0; k < 3; ++k) {
      auto key = std::minmax(pairs[k].first, pairs[k].second);
      auto [it, inserted] = midpoint_of_edge.try_emplace({key.first, key.second}, -1);
      if (inserted) {
        it->second = static_cast<int>(layout.p2_nodes.size());
        const Vec2 a = mesh.vertices[key.first], b = mesh.vertices[key.second];
        layout.p2_nodes.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      }
      nodes[3 + k] = it->second;
    }
    layout.tri_p2_nodes[t] = nodes;
  }

  const int n_nodes = static_cast<int>(layout.p2_nodes.size());
  std::vector<int> node_rank(n_nodes);
  std::iota(node_rank.begin(), node_rank.end(), 0);
  std::sort(node_rank.begin(), node_rank.end(), [&](int a, int b) {
    return NodeOrder{}(layout.p2_nodes[a], layout.p2_nodes[b]);
  });
  layout.u_dof_of_node.resize(n_nodes);
  for (int r = 0; r < n_nodes; ++r) layout.u_dof_of_node[node_rank[r]] = 2 * r;
  layout.n_u = 2 * n_nodes;

  std::vector<int> vertex_rank(n_vertices);
  std::iota(vertex_rank.begin(), vertex_rank.end(), 0);
  std::sort(vertex_rank.begin(), vertex_rank.end(), [&](int a, int b) {
    return NodeOrder{}(mesh.vertices[a], mesh.vertices[b]);
  });
  layout.mu_dof_of_vertex.resize(n_vertices);
  for (int r = 0; r < n_vertices; ++r) layout.mu_dof_of_vertex[vertex_rank[r]] = r;
  layout.n_mu = n_vertices;
}

void add_dirichlet_once(std::vector<DirichletBc>& list, int dof, double value) {
  for (const auto& bc : list)
    if (bc.dof == dof) return;
  list.push_back({dof, value});
}

}  // namespace

FieldLayout build_layout(const Mesh& mesh, const ScenarioSpec& spec) {
  FieldLayout layout;
  build_dof_maps(mesh, layout);

  const int n_nodes = static_cast<int>(layout.p2_nodes.size());
  if (spec.id == ScenarioId::Square) {
    // roller supports on the symmetry edges: u_y = 0 at the bottom, u_x = 0
    // on the left
    for (int n = 0; n < n_nodes; ++n) {
      if (near(layout.p2_nodes[n].y, 0.0)) add_dirichlet_once(layout.dirichlet, layout.u_dof(n, 1), 0.0);
      if (near(layout.p2_nodes[n].x, 0.0)) add_dirichlet_once(layout.dirichlet, layout.u_dof(n, 0), 0.0);
    }
    for (const auto& e : mesh.boundary_edges)
      if (e.tag == EdgeTag::Top || e.tag == EdgeTag::Right)
        layout.robin_edges.push_back({e.v0, e.v1});
  } else {
    // symmetry edge at x = width carries u_x = 0; a single pin at
    // (width, 0) removes the remaining vertical translation
    for (int n = 0; n < n_nodes; ++n) {
      const Vec2 p = layout.p2_nodes[n];
      if (near(p.x, mesh.width)) {
        add_dirichlet_once(layout.dirichlet, layout.u_dof(n, 0), 0.0);
        if (near(p.y, 0.0)) add_dirichlet_once(layout.dirichlet, layout.u_dof(n, 1), 0.0);
      }
    }
    const double exposed_top = spec.exposed_fraction * mesh.height;
    for (const auto& e : mesh.boundary_edges) {
      if (e.tag != EdgeTag::Left) continue;
      const double y_max = std::max(mesh.vertices[e.v0].y, mesh.vertices[e.v1].y);
      if (y_max <= exposed_top + kCoordTol) layout.robin_edges.push_back({e.v0, e.v1});
    }
  }

  std::sort(layout.dirichlet.begin(), layout.dirichlet.end(),
            [](const DirichletBc& a, const DirichletBc& b) { return a.dof < b.dof; });
  return layout;
}

FieldLayout build_layout_free(const Mesh& mesh) {
  FieldLayout layout;
  build_dof_maps(mesh, layout);
  return layout;
}

FieldLayout build_layout_all_dirichlet(const Mesh& mesh) {
  FieldLayout layout;
  build_dof_maps(mesh, layout);

  auto on_boundary = [&mesh](Vec2 p) {
    return near(p.x, 0.0) || near(p.x, mesh.width) || near(p.y, 0.0) || near(p.y, mesh.height);
  };
  for (int n = 0; n < static_cast<int>(layout.p2_nodes.size()); ++n) {
    if (!on_boundary(layout.p2_nodes[n])) continue;
    add_dirichlet_once(layout.dirichlet, layout.u_dof(n, 0), 0.0);
    add_dirichlet_once(layout.dirichlet, layout.u_dof(n, 1), 0.0);
  }
  for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v)
    if (on_boundary(mesh.vertices[v]))
      add_dirichlet_once(layout.dirichlet, layout.mu_dof_monolithic(v), 0.0);

  std::sort(layout.dirichlet.begin(), layout.dirichlet.end(),
            [](const DirichletBc& a, const DirichletBc& b) { return a.dof < b.dof; });
  return layout;
}

namespace {

bool bary_of(const Mesh& mesh, int t, Vec2 p, std::array<double, 3>& bary) {
  const auto& tri = mesh.triangles[t];
  const Vec2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
  const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
  bary = {1.0 - l1 - l2, l1, l2};
  const double tol = 1e-12;
  return bary[0] >= -tol && bary[1] >= -tol && bary[2] >= -tol;
}

}  // namespace

PointLocation locate_point(const Mesh& mesh, Vec2 p) {
  if (p.x < -kCoordTol || p.x > mesh.width + kCoordTol || p.y < -kCoordTol ||
      p.y > mesh.height + kCoordTol) {
    std::ostringstream msg;
    msg << "point (" << p.x << ", " << p.y << ") outside the domain";
    throw LookupError(msg.str());
  }

  PointLocation loc;
  if (mesh.cells_x > 0 && mesh.cells_y > 0) {
    // structured fast path: candidate cell from the grid index
    const double hx = mesh.width / mesh.cells_x;
    const double hy = mesh.height / mesh.cells_y;
    const int i = std::clamp(static_cast<int>(p.x / hx), 0, mesh.cells_x - 1);
    const int j = std::clamp(static_cast<int>(p.y / hy), 0, mesh.cells_y - 1);
    auto try_cell = [&](int ci, int cj) {
      if (ci < 0 || cj < 0 || ci >= mesh.cells_x || cj >= mesh.cells_y) return false;
      const int first = 2 * (cj * mesh.cells_x + ci);
      for (int t = first; t < first + 2; ++t) {
        if (bary_of(mesh, t, p, loc.bary)) {
          loc.triangle = t;
          return true;
        }
      }
      return false;
    };

    if (try_cell(i, j)) return loc;
    // rounding near cell borders: probe the neighbors
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (try_cell(i + di, j + dj)) return loc;
  }

  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    if (bary_of(mesh, t, p, loc.bary)) {
      loc.triangle = t;
      return loc;
    }
  }
  std::ostringstream msg;
  msg << "point (" << p.x << ", " << p.y << ") not contained in any triangle";
  throw LookupError(msg.str());
}

std::string layout_digest(const ScenarioSpec& spec, const Mesh& mesh, const FieldLayout& layout) {
  std::ostringstream s;
  s << spec.name() << ":" << spec.density << ":" << mesh.cells_x << "x" << mesh.cells_y << ":"
    << mesh.width << "x" << mesh.height << ":u" << layout.n_u << ":mu" << layout.n_mu << ":bc"
    << layout.dirichlet.size() << ":robin" << layout.robin_edges.size();
  return s.str();
}

}  // namespace hmor
