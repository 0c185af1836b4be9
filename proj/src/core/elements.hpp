#pragma once

#include <array>
#include <span>

namespace hmor {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

/// Quadrature point on the reference triangle, barycentric coordinates and a
/// weight normalized so that sum(w) = 1 (physical integral = area * sum w f).
struct TriQuadPoint {
  std::array<double, 3> bary;
  double weight;
};

/// Degree-4 exact rule (6 points); default for all bilinear forms of the
/// quadratic/linear pair.
std::span<const TriQuadPoint> tri_quadrature_deg4();

/// Degree-6 exact rule (12 points); used for error norms and oracles.
std::span<const TriQuadPoint> tri_quadrature_deg6();

/// 3-point Gauss rule on [0,1] for boundary-edge integrals.
struct EdgeQuadPoint {
  double t;
  double weight;
};
std::span<const EdgeQuadPoint> edge_quadrature();

// Linear shape functions on the reference triangle are the barycentric
// coordinates themselves; their reference gradients are constant.
inline std::array<double, 3> p1_values(const std::array<double, 3>& bary) { return bary; }
std::array<Vec2, 3> p1_ref_gradients();

// Quadratic shape functions; local node order is the three vertices followed
// by the midpoints opposite each vertex (m0 between v1/v2, m1 between v0/v2,
// m2 between v0/v1).
std::array<double, 6> p2_values(const std::array<double, 3>& bary);
std::array<Vec2, 6> p2_ref_gradients(const std::array<double, 3>& bary);

/// Affine map data for one triangle: jacobian, inverse-transpose and area.
struct TriangleFrame {
  double area = 0.0;
  // columns of the jacobian [p1-p0 | p2-p0]
  double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
  // inverse transpose, maps reference gradients to physical ones
  double it00 = 0, it01 = 0, it10 = 0, it11 = 0;

  Vec2 grad_to_physical(Vec2 ref_grad) const {
    return {it00 * ref_grad.x + it01 * ref_grad.y, it10 * ref_grad.x + it11 * ref_grad.y};
  }
};

TriangleFrame triangle_frame(Vec2 p0, Vec2 p1, Vec2 p2);

inline Vec2 barycentric_point(Vec2 p0, Vec2 p1, Vec2 p2, const std::array<double, 3>& bary) {
  return {bary[0] * p0.x + bary[1] * p1.x + bary[2] * p2.x,
          bary[0] * p0.y + bary[1] * p1.y + bary[2] * p2.y};
}

}  // namespace hmor
