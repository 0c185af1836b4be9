#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/elements.hpp"

namespace hmor {

enum class ScenarioId { Square, Bar };

enum class EdgeTag { Bottom, Right, Top, Left };

/// Rectangle scenario description: domain proportions, mesh density and the
/// boundary-condition assignment implied by the scenario id.
struct ScenarioSpec {
  ScenarioId id = ScenarioId::Square;
  int density = 50;  // cells across the domain width
  double width = 1.0;
  double height = 1.0;
  // Bar only: lower fraction of the outer (left) edge in contact with the
  // solvent; the rest of the boundary is flux-free.
  double exposed_fraction = 0.75;

  static ScenarioSpec square(int density);
  static ScenarioSpec bar(int density, double exposed_fraction = 0.75);

  std::string name() const { return id == ScenarioId::Square ? "square" : "bar"; }
};

struct BoundaryEdge {
  int v0 = -1;
  int v1 = -1;
  EdgeTag tag = EdgeTag::Bottom;
};

/// Structured triangulation of a rectangle; every grid cell is split along
/// the same diagonal, giving exactly 2 * cells_x * cells_y triangles.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double width = 0.0;
  double height = 0.0;
  int cells_x = 0;
  int cells_y = 0;

  double triangle_area(int t) const;
  double total_area() const;
};

Mesh build_mesh(const ScenarioSpec& spec);

struct DirichletBc {
  int dof = -1;  // monolithic index: displacement dofs first, then potential
  double value = 0.0;
};

struct RobinEdge {
  int v0 = -1;
  int v1 = -1;
};

/// Taylor-Hood degree-of-freedom maps: quadratic vector displacement on
/// vertices+midpoints, linear scalar potential on vertices. Dof numbering is
/// lexicographic by node coordinate with interleaved (x, y) components, so
/// two builds of the same spec agree bit for bit.
struct FieldLayout {
  std::vector<Vec2> p2_nodes;                    // vertices first, then edge midpoints
  std::vector<std::array<int, 6>> tri_p2_nodes;  // per-triangle quadratic node ids
  std::vector<int> u_dof_of_node;                // node id -> x dof (y dof = +1)
  std::vector<int> mu_dof_of_vertex;             // vertex id -> potential dof
  int n_u = 0;
  int n_mu = 0;
  std::vector<DirichletBc> dirichlet;  // monolithic dof indices, each dof once
  std::vector<RobinEdge> robin_edges;

  int n_total() const { return n_u + n_mu; }
  int u_dof(int node, int component) const { return u_dof_of_node[node] + component; }
  int mu_dof_monolithic(int vertex) const { return n_u + mu_dof_of_vertex[vertex]; }
};

FieldLayout build_layout(const Mesh& mesh, const ScenarioSpec& spec);

/// Dof maps only, no constraints and no exchange boundary; for custom meshes.
FieldLayout build_layout_free(const Mesh& mesh);

/// Layout variant with the exact same dof maps but every boundary node
/// constrained in both fields; used by the manufactured-solution harness.
FieldLayout build_layout_all_dirichlet(const Mesh& mesh);

struct PointLocation {
  int triangle = -1;
  std::array<double, 3> bary{0, 0, 0};
};

/// Containing triangle and barycentric coordinates; throws LookupError for
/// points outside the domain (tolerance 1e-12 on the bounding box).
PointLocation locate_point(const Mesh& mesh, Vec2 p);

/// Stable digest of the discretization (scenario, density, counts); stored in
/// artifact footers to detect mismatched inputs.
std::string layout_digest(const ScenarioSpec& spec, const Mesh& mesh, const FieldLayout& layout);

}  // namespace hmor
