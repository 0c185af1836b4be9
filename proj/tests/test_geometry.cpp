#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "core/errors.hpp"
#include "core/geometry.hpp"

using namespace hmor;

TEST_CASE("square mesh counts and areas") {
  const Mesh m50 = build_mesh(ScenarioSpec::square(50));
  CHECK(m50.triangles.size() == 5000);
  CHECK(m50.vertices.size() == 51 * 51);
  CHECK(m50.total_area() == doctest::Approx(1.0).epsilon(1e-12));

  const Mesh m1 = build_mesh(ScenarioSpec::square(1));
  CHECK(m1.triangles.size() == 2);
  CHECK(m1.total_area() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("bar mesh counts and area oracle") {
  const Mesh bar = build_mesh(ScenarioSpec::bar(10));
  CHECK(bar.cells_x == 10);
  CHECK(bar.cells_y == 80);
  CHECK(bar.triangles.size() == 1600);
  // independent oracle: accumulate all signed triangle areas
  double area = 0.0;
  for (int t = 0; t < static_cast<int>(bar.triangles.size()); ++t) {
    const double a = bar.triangle_area(t);
    CHECK(a > 0.0);
    area += a;
  }
  CHECK(area == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("triangle areas positive and sum to the domain area") {
  for (int nh : {1, 3, 7, 20}) {
    for (auto spec : {ScenarioSpec::square(nh), ScenarioSpec::bar(nh)}) {
      const Mesh m = build_mesh(spec);
      double sum = 0.0;
      for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
        CHECK(m.triangle_area(t) > 0.0);
        sum += m.triangle_area(t);
      }
      CHECK(sum == doctest::Approx(spec.width * spec.height).epsilon(1e-12));
    }
  }
}

TEST_CASE("interior edges shared by two triangles, boundary edges by one") {
  const Mesh m = build_mesh(ScenarioSpec::square(4));
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      auto e = std::minmax(tri[k], tri[(k + 1) % 3]);
      edge_count[{e.first, e.second}]++;
    }
  }
  std::set<std::pair<int, int>> boundary;
  for (const auto& e : m.boundary_edges) {
    auto key = std::minmax(e.v0, e.v1);
    boundary.insert({key.first, key.second});
  }
  for (const auto& [edge, count] : edge_count) {
    if (boundary.count(edge))
      CHECK(count == 1);
    else
      CHECK(count == 2);
  }
  // boundary edge loop is closed: every boundary vertex has degree 2
  std::map<int, int> degree;
  for (const auto& e : m.boundary_edges) {
    degree[e.v0]++;
    degree[e.v1]++;
  }
  for (const auto& [v, d] : degree) CHECK(d == 2);
}

TEST_CASE("mesh construction rejects bad input") {
  CHECK_THROWS_AS(build_mesh(ScenarioSpec::square(0)), ConfigError);
  ScenarioSpec bad = ScenarioSpec::square(4);
  bad.width = -1.0;
  CHECK_THROWS_AS(build_mesh(bad), ConfigError);
  ScenarioSpec bad_exposure = ScenarioSpec::bar(4, 0.0);
  CHECK_THROWS_AS(build_mesh(bad_exposure), ConfigError);
}

TEST_CASE("layout dof counts") {
  const ScenarioSpec s1 = ScenarioSpec::square(1);
  const Mesh m1 = build_mesh(s1);
  const FieldLayout l1 = build_layout(m1, s1);
  CHECK(l1.n_mu == 4);
  CHECK(l1.n_u == 2 * (4 + 5));  // 4 vertices + 5 unique edges

  const ScenarioSpec s50 = ScenarioSpec::square(50);
  const Mesh m50 = build_mesh(s50);
  const FieldLayout l50 = build_layout(m50, s50);
  CHECK(l50.n_mu == 2601);
  // traversal oracle: count unique edges over all triangles
  std::set<std::pair<int, int>> edges;
  for (const auto& tri : m50.triangles)
    for (int k = 0; k < 3; ++k) {
      auto e = std::minmax(tri[k], tri[(k + 1) % 3]);
      edges.insert({e.first, e.second});
    }
  CHECK(l50.n_u == 2 * static_cast<int>(m50.vertices.size() + edges.size()));
}

TEST_CASE("square dirichlet constraints enumerate the clamped edges") {
  const ScenarioSpec spec = ScenarioSpec::square(2);
  const Mesh mesh = build_mesh(spec);
  const FieldLayout layout = build_layout(mesh, spec);

  // oracle: walk every quadratic node and collect expected constraints
  std::set<int> expected;
  for (int n = 0; n < static_cast<int>(layout.p2_nodes.size()); ++n) {
    if (std::abs(layout.p2_nodes[n].y) < 1e-14) expected.insert(layout.u_dof(n, 1));
    if (std::abs(layout.p2_nodes[n].x) < 1e-14) expected.insert(layout.u_dof(n, 0));
  }
  std::set<int> actual;
  for (const auto& bc : layout.dirichlet) {
    CHECK(bc.value == 0.0);
    CHECK(actual.insert(bc.dof).second);  // each dof constrained exactly once
  }
  CHECK(actual == expected);
  // bottom edge carries 5 nodes (3 vertices + 2 midpoints), left edge likewise
  CHECK(actual.size() == 10);
}

TEST_CASE("bar boundary conditions: symmetry edge, pin, exposed robin edges") {
  const ScenarioSpec spec = ScenarioSpec::bar(4);
  const Mesh mesh = build_mesh(spec);
  const FieldLayout layout = build_layout(mesh, spec);

  int pin_count = 0;
  for (const auto& bc : layout.dirichlet) {
    CHECK(bc.dof < layout.n_u);
    if (bc.dof % 2 == 1) ++pin_count;
  }
  CHECK(pin_count == 1);  // single u_y pin at the symmetry corner

  std::set<std::pair<int, int>> boundary;
  for (const auto& e : mesh.boundary_edges) {
    auto key = std::minmax(e.v0, e.v1);
    boundary.insert({key.first, key.second});
  }
  double exposed_len = 0.0;
  for (const auto& e : layout.robin_edges) {
    auto key = std::minmax(e.v0, e.v1);
    CHECK(boundary.count({key.first, key.second}) == 1);
    const Vec2 a = mesh.vertices[e.v0], b = mesh.vertices[e.v1];
    CHECK(a.x == 0.0);
    CHECK(b.x == 0.0);
    exposed_len += std::abs(b.y - a.y);
  }
  CHECK(exposed_len == doctest::Approx(0.75 * 4.0).epsilon(1e-12));
}

TEST_CASE("layout build is deterministic") {
  const ScenarioSpec spec = ScenarioSpec::bar(3);
  const Mesh ma = build_mesh(spec), mb = build_mesh(spec);
  const FieldLayout la = build_layout(ma, spec), lb = build_layout(mb, spec);
  REQUIRE(la.u_dof_of_node == lb.u_dof_of_node);
  REQUIRE(la.mu_dof_of_vertex == lb.mu_dof_of_vertex);
  REQUIRE(la.dirichlet.size() == lb.dirichlet.size());
  for (size_t i = 0; i < la.dirichlet.size(); ++i) CHECK(la.dirichlet[i].dof == lb.dirichlet[i].dof);
}

TEST_CASE("locate_point: corners, grid vertices, reconstruction round trip") {
  const ScenarioSpec spec = ScenarioSpec::square(2);
  const Mesh mesh = build_mesh(spec);

  const PointLocation corner = locate_point(mesh, {0.0, 0.0});
  int corner_local = -1;
  for (int k = 0; k < 3; ++k)
    if (corner.bary[k] == doctest::Approx(1.0).epsilon(1e-14)) corner_local = k;
  REQUIRE(corner_local >= 0);
  const Vec2 cv = mesh.vertices[mesh.triangles[corner.triangle][corner_local]];
  CHECK(cv.x == 0.0);
  CHECK(cv.y == 0.0);

  const PointLocation center = locate_point(mesh, {0.5, 0.5});
  double max_bary = 0.0;
  int arg = -1;
  for (int k = 0; k < 3; ++k)
    if (center.bary[k] > max_bary) {
      max_bary = center.bary[k];
      arg = k;
    }
  CHECK(max_bary == doctest::Approx(1.0).epsilon(1e-14));
  const Vec2 hit = mesh.vertices[mesh.triangles[center.triangle][arg]];
  CHECK(hit.x == doctest::Approx(0.5));
  CHECK(hit.y == doctest::Approx(0.5));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{unit(rng), unit(rng)};
    const PointLocation loc = locate_point(mesh, p);
    const auto& tri = mesh.triangles[loc.triangle];
    const Vec2 back = barycentric_point(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                        mesh.vertices[tri[2]], loc.bary);
    CHECK(std::abs(back.x - p.x) < 1e-12);
    CHECK(std::abs(back.y - p.y) < 1e-12);
  }

  CHECK_THROWS_AS(locate_point(mesh, {1.5, 0.5}), LookupError);
  CHECK_THROWS_AS(locate_point(mesh, {0.5, -0.1}), LookupError);
}
