#include "core/elements.hpp"

#include <cmath>

namespace hmor {

namespace {

constexpr double kDeg4W1 = 0.223381589678011;
constexpr double kDeg4A1 = 0.445948490915965;
constexpr double kDeg4B1 = 0.108103018168070;
constexpr double kDeg4W2 = 0.109951743655322;
constexpr double kDeg4A2 = 0.091576213509771;
constexpr double kDeg4B2 = 0.816847572980459;

const TriQuadPoint kDeg4[6] = {
    {{kDeg4B1, kDeg4A1, kDeg4A1}, kDeg4W1},
    {{kDeg4A1, kDeg4B1, kDeg4A1}, kDeg4W1},
    {{kDeg4A1, kDeg4A1, kDeg4B1}, kDeg4W1},
    {{kDeg4B2, kDeg4A2, kDeg4A2}, kDeg4W2},
    {{kDeg4A2, kDeg4B2, kDeg4A2}, kDeg4W2},
    {{kDeg4A2, kDeg4A2, kDeg4B2}, kDeg4W2},
};

constexpr double kDeg6W1 = 0.050844906370207;
constexpr double kDeg6A1 = 0.063089014491502;
constexpr double kDeg6B1 = 0.873821971016996;
constexpr double kDeg6W2 = 0.116786275726379;
constexpr double kDeg6A2 = 0.249286745170910;
constexpr double kDeg6B2 = 0.501426509658179;
constexpr double kDeg6W3 = 0.082851075618374;
constexpr double kDeg6A3 = 0.310352451033785;
constexpr double kDeg6B3 = 0.636502499121399;
constexpr double kDeg6C3 = 0.053145049844816;

const TriQuadPoint kDeg6[12] = {
    {{kDeg6B1, kDeg6A1, kDeg6A1}, kDeg6W1},
    {{kDeg6A1, kDeg6B1, kDeg6A1}, kDeg6W1},
    {{kDeg6A1, kDeg6A1, kDeg6B1}, kDeg6W1},
    {{kDeg6B2, kDeg6A2, kDeg6A2}, kDeg6W2},
    {{kDeg6A2, kDeg6B2, kDeg6A2}, kDeg6W2},
    {{kDeg6A2, kDeg6A2, kDeg6B2}, kDeg6W2},
    {{kDeg6B3, kDeg6A3, kDeg6C3}, kDeg6W3},
    {{kDeg6B3, kDeg6C3, kDeg6A3}, kDeg6W3},
    {{kDeg6A3, kDeg6B3, kDeg6C3}, kDeg6W3},
    {{kDeg6A3, kDeg6C3, kDeg6B3}, kDeg6W3},
    {{kDeg6C3, kDeg6B3, kDeg6A3}, kDeg6W3},
    {{kDeg6C3, kDeg6A3, kDeg6B3}, kDeg6W3},
};

const double kGauss3Off = 0.5 * std::sqrt(0.6);
const EdgeQuadPoint kEdge3[3] = {
    {0.5 - kGauss3Off, 5.0 / 18.0},
    {0.5, 8.0 / 18.0},
    {0.5 + kGauss3Off, 5.0 / 18.0},
};

}  // namespace

std::span<const TriQuadPoint> tri_quadrature_deg4() { return {kDeg4, 6}; }
std::span<const TriQuadPoint> tri_quadrature_deg6() { return {kDeg6, 12}; }
std::span<const EdgeQuadPoint> edge_quadrature() { return {kEdge3, 3}; }

std::array<Vec2, 3> p1_ref_gradients() {
  return {Vec2{-1.0, -1.0}, Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
}

std::array<double, 6> p2_values(const std::array<double, 3>& b) {
  const double l0 = b[0], l1 = b[1], l2 = b[2];
  return {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
          4 * l1 * l2, 4 * l0 * l2, 4 * l0 * l1};
}

std::array<Vec2, 6> p2_ref_gradients(const std::array<double, 3>& b) {
  const auto g = p1_ref_gradients();
  const double l0 = b[0], l1 = b[1], l2 = b[2];
  std::array<Vec2, 6> out;
  out[0] = (4 * l0 - 1) * g[0];
  out[1] = (4 * l1 - 1) * g[1];
  out[2] = (4 * l2 - 1) * g[2];
  out[3] = 4.0 * (l2 * g[1] + l1 * g[2]);
  out[4] = 4.0 * (l2 * g[0] + l0 * g[2]);
  out[5] = 4.0 * (l1 * g[0] + l0 * g[1]);
  return out;
}

TriangleFrame triangle_frame(Vec2 p0, Vec2 p1, Vec2 p2) {
  TriangleFrame f;
  f.j00 = p1.x - p0.x;
  f.j10 = p1.y - p0.y;
  f.j01 = p2.x - p0.x;
  f.j11 = p2.y - p0.y;
  const double det = f.j00 * f.j11 - f.j01 * f.j10;
  f.area = 0.5 * det;
  const double inv = 1.0 / det;
  // inverse transpose of J
  f.it00 = f.j11 * inv;
  f.it01 = -f.j10 * inv;
  f.it10 = -f.j01 * inv;
  f.it11 = f.j00 * inv;
  return f;
}

}  // namespace hmor
