#pragma once

#include "cavlab/geometry.hpp"

namespace cavlab::predicates {

/// Positive if a, b, c are in counter-clockwise order, zero if collinear.
/// The sign is exact: a floating-point filter falls back to expansion
/// arithmetic when the rounded determinant is not trustworthy.
double orient2d(Point a, Point b, Point c);

/// Positive if d lies strictly inside the circle through the
/// counter-clockwise triangle a, b, c; zero if cocircular. Exact sign.
double incircle(Point a, Point b, Point c, Point d);

/// Circumcenter of a non-degenerate triangle.
Point circumcenter(Point a, Point b, Point c);

}  // namespace cavlab::predicates
