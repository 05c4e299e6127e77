#pragma once

// Local P2 element helpers shared by assembly and post-processing.

#include <array>

#include "cavlab/geometry.hpp"

namespace cavlab::p2 {

// Symmetric 6-point degree-4 rule: barycentric (1-2a, a, a) and permutations.
struct QuadPoint {
  std::array<double, 3> lambda;
  double weight;  // relative to the triangle area, sums to 1
};

inline const std::array<QuadPoint, 6>& rule6() {
  static const std::array<QuadPoint, 6> rule = [] {
    constexpr double a1 = 0.44594849091596488632;
    constexpr double w1 = 0.22338158967801146570;
    constexpr double a2 = 0.09157621350977074346;
    constexpr double w2 = 0.10995174365532186764;
    return std::array<QuadPoint, 6>{{
        {{1.0 - 2.0 * a1, a1, a1}, w1},
        {{a1, 1.0 - 2.0 * a1, a1}, w1},
        {{a1, a1, 1.0 - 2.0 * a1}, w1},
        {{1.0 - 2.0 * a2, a2, a2}, w2},
        {{a2, 1.0 - 2.0 * a2, a2}, w2},
        {{a2, a2, 1.0 - 2.0 * a2}, w2},
    }};
  }();
  return rule;
}

struct Triangle {
  std::array<Point, 3> v;
  std::array<Point, 3> grad_lambda;
  double jac = 0.0;  // twice the signed area

  Triangle(Point a, Point b, Point c) : v{a, b, c} {
    jac = cross(b - a, c - a);
    const double inv = 1.0 / jac;
    grad_lambda[0] = inv * Point{b.y - c.y, c.x - b.x};
    grad_lambda[1] = inv * Point{c.y - a.y, a.x - c.x};
    grad_lambda[2] = inv * Point{a.y - b.y, b.x - a.x};
  }

  double area() const { return 0.5 * jac; }

  Point point(const std::array<double, 3>& l) const {
    return {l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x, l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y};
  }

  std::array<double, 3> barycentric(Point p) const {
    const double l1 = cross(p - v[0], v[2] - v[0]) / jac;
    const double l2 = cross(v[1] - v[0], p - v[0]) / jac;
    return {1.0 - l1 - l2, l1, l2};
  }
};

// Values in local order v0, v1, v2, m01, m12, m20.
inline std::array<double, 6> values(const std::array<double, 3>& l) {
  return {l[0] * (2.0 * l[0] - 1.0), l[1] * (2.0 * l[1] - 1.0), l[2] * (2.0 * l[2] - 1.0),
          4.0 * l[0] * l[1],         4.0 * l[1] * l[2],         4.0 * l[2] * l[0]};
}

inline std::array<Point, 6> gradients(const Triangle& t, const std::array<double, 3>& l) {
  const auto& g = t.grad_lambda;
  return {(4.0 * l[0] - 1.0) * g[0], (4.0 * l[1] - 1.0) * g[1], (4.0 * l[2] - 1.0) * g[2],
          4.0 * (l[0] * g[1] + l[1] * g[0]), 4.0 * (l[1] * g[2] + l[2] * g[1]),
          4.0 * (l[2] * g[0] + l[0] * g[2])};
}

}  // namespace cavlab::p2
