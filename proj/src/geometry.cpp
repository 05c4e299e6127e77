#include "cavlab/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

#include "cavlab/error.hpp"

namespace cavlab {

namespace {

constexpr double kPi = std::numbers::pi;

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  auto orient = [](Point a, Point b, Point c) { return cross(b - a, c - a); };
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Point a, Point b, Point c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

// Half extents of the (rotated) ellipse along the coordinate axes.
Point ellipse_half_extent(const CavityShape& s) {
  const double c = std::cos(s.angle);
  const double sn = std::sin(s.angle);
  return {std::sqrt(s.semi_a * s.semi_a * c * c + s.semi_b * s.semi_b * sn * sn),
          std::sqrt(s.semi_a * s.semi_a * sn * sn + s.semi_b * s.semi_b * c * c)};
}

}  // namespace

double DomainSpec::inset(Point p) const {
  const Point hi = upper();
  return std::min({p.x - corner.x, hi.x - p.x, p.y - corner.y, hi.y - p.y});
}

void DomainSpec::validate() const {
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw GeometryError("domain side must be positive and finite");
  }
}

CavityShape CavityShape::circle(Point center, double radius) {
  CavityShape s;
  s.kind = ShapeKind::Circle;
  s.center = center;
  s.radius = radius;
  return s;
}

CavityShape CavityShape::ellipse(Point center, double a, double b, double angle) {
  CavityShape s;
  s.kind = ShapeKind::Ellipse;
  s.center = center;
  s.semi_a = a;
  s.semi_b = b;
  s.angle = angle;
  s.radius = 0.0;
  return s;
}

CavityShape CavityShape::polygon(std::vector<Point> vertices) {
  CavityShape s;
  s.kind = ShapeKind::Polygon;
  s.vertices = std::move(vertices);
  s.radius = 0.0;
  if (!s.vertices.empty()) {
    Point c{};
    for (const Point& v : s.vertices) c = c + v;
    s.center = (1.0 / static_cast<double>(s.vertices.size())) * c;
  }
  return s;
}

void CavityShape::validate() const {
  switch (kind) {
    case ShapeKind::Circle:
      if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw GeometryError("circle radius must be positive");
      }
      break;
    case ShapeKind::Ellipse:
      if (!(semi_a > 0.0) || !(semi_b > 0.0)) {
        throw GeometryError("ellipse semi-axes must be positive");
      }
      break;
    case ShapeKind::Polygon:
      if (vertices.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
      if (!polygon_is_simple(vertices)) throw GeometryError("polygon is self-intersecting");
      if (std::abs(polygon_signed_area(vertices)) <= 0.0) {
        throw GeometryError("polygon has zero area");
      }
      break;
  }
}

double CavityShape::effective_rho() const {
  if (rho > 0.0) return rho;
  switch (kind) {
    case ShapeKind::Circle:
      return radius;
    case ShapeKind::Ellipse:
      return std::min(semi_a, semi_b);
    case ShapeKind::Polygon: {
      // Circumscribed circle about the vertex centroid.
      double r = 0.0;
      for (const Point& v : vertices) r = std::max(r, distance(v, center));
      return r;
    }
  }
  return 0.0;
}

double CavityShape::diameter() const {
  switch (kind) {
    case ShapeKind::Circle:
      return 2.0 * radius;
    case ShapeKind::Ellipse:
      return 2.0 * std::max(semi_a, semi_b);
    case ShapeKind::Polygon: {
      double d = 0.0;
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        for (std::size_t j = i + 1; j < vertices.size(); ++j) {
          d = std::max(d, distance(vertices[i], vertices[j]));
        }
      }
      return d;
    }
  }
  return 0.0;
}

bool CavityShape::contains(Point p) const {
  switch (kind) {
    case ShapeKind::Circle: {
      const Point d = p - center;
      return dot(d, d) < radius * radius;
    }
    case ShapeKind::Ellipse: {
      const Point d = p - center;
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double u = c * d.x + s * d.y;
      const double v = -s * d.x + c * d.y;
      return (u * u) / (semi_a * semi_a) + (v * v) / (semi_b * semi_b) < 1.0;
    }
    case ShapeKind::Polygon:
      return point_in_polygon(vertices, p);
  }
  return false;
}

double polygon_signed_area(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * twice;
}

bool polygon_is_simple(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool point_in_polygon(std::span<const Point> poly, Point p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point a = poly[i];
    const Point b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double cavity_area(const CavityShape& shape) {
  shape.validate();
  switch (shape.kind) {
    case ShapeKind::Circle:
      return kPi * shape.radius * shape.radius;
    case ShapeKind::Ellipse:
      return kPi * shape.semi_a * shape.semi_b;
    case ShapeKind::Polygon:
      return std::abs(polygon_signed_area(shape.vertices));
  }
  return 0.0;
}

double signed_boundary_distance(const DomainSpec& domain, const CavityShape& shape) {
  const Point lo = domain.corner;
  const Point hi = domain.upper();
  switch (shape.kind) {
    case ShapeKind::Circle:
      return domain.inset(shape.center) - shape.radius;
    case ShapeKind::Ellipse: {
      const Point e = ellipse_half_extent(shape);
      const Point c = shape.center;
      return std::min({c.x - e.x - lo.x, hi.x - c.x - e.x, c.y - e.y - lo.y, hi.y - c.y - e.y});
    }
    case ShapeKind::Polygon: {
      // Distance of a polygon to a half-plane boundary is attained at a vertex.
      double d = std::numeric_limits<double>::infinity();
      for (const Point& v : shape.vertices) d = std::min(d, domain.inset(v));
      return d;
    }
  }
  return 0.0;
}

double boundary_distance(const DomainSpec& domain, const CavityShape& shape) {
  domain.validate();
  shape.validate();
  const double d = signed_boundary_distance(domain, shape);
  if (!(d > 0.0)) {
    std::ostringstream msg;
    msg << "cavity is not strictly inside the domain (signed distance " << d << ")";
    throw GeometryError(msg.str());
  }
  return d;
}

AssumptionReport validate_assumptions(const DomainSpec& domain, const CavityShape& shape,
                                      const AssumptionLimits& limits) {
  domain.validate();
  shape.validate();

  AssumptionReport r;
  r.d0 = signed_boundary_distance(domain, shape);
  r.diam = shape.diameter();
  r.rho = shape.effective_rho();
  r.q = r.diam / r.rho;
  r.area = cavity_area(shape);

  std::ostringstream notes;
  const AprioriConstants& k = domain.constants;
  const double rho0_d = k.rho0 * k.rho0;
  r.h1 = domain.area() <= k.m1 * rho0_d * (1.0 + 1e-12);
  if (!r.h1) notes << "area: |Omega| exceeds M1*rho0^2; ";

  r.h2 = r.d0 > 0.0 && r.d0 >= limits.d0_min;
  if (!r.h2) notes << "distance: d(D, dOmega) = " << r.d0 << " below d0_min = " << limits.d0_min << "; ";

  r.h3 = r.q <= limits.q_max;
  if (r.q > limits.q_max) notes << "shape: diam/rho = " << r.q << " exceeds Q_max; ";

  if (shape.kind == ShapeKind::Polygon) {
    notes << "polygon: C2,alpha regularity not checked, rho from circumscribed circle; ";
  }
  r.notes = notes.str();
  return r;
}

std::vector<Point> polygonalize(const CavityShape& shape, int n_segments) {
  shape.validate();
  if (shape.kind == ShapeKind::Polygon) {
    std::vector<Point> out = shape.vertices;
    if (polygon_signed_area(out) < 0.0) std::reverse(out.begin(), out.end());
    return out;
  }
  if (n_segments < 3) throw GeometryError("polygonalize needs at least 3 segments");

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n_segments));
  const double ca = std::cos(shape.angle);
  const double sa = std::sin(shape.angle);
  for (int i = 0; i < n_segments; ++i) {
    const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_segments);
    if (shape.kind == ShapeKind::Circle) {
      out.push_back({shape.center.x + shape.radius * std::cos(t),
                     shape.center.y + shape.radius * std::sin(t)});
    } else {
      const double u = shape.semi_a * std::cos(t);
      const double v = shape.semi_b * std::sin(t);
      out.push_back({shape.center.x + ca * u - sa * v, shape.center.y + sa * u + ca * v});
    }
  }
  return out;
}

int default_segment_count(const CavityShape& shape, double h_target) {
  switch (shape.kind) {
    case ShapeKind::Circle:
      return std::max(64, static_cast<int>(std::ceil(2.0 * kPi * shape.radius / h_target)));
    case ShapeKind::Ellipse: {
      // Ramanujan's perimeter approximation.
      const double a = shape.semi_a;
      const double b = shape.semi_b;
      const double p = kPi * (3.0 * (a + b) - std::sqrt((3.0 * a + b) * (a + 3.0 * b)));
      return std::max(64, static_cast<int>(std::ceil(p / h_target)));
    }
    case ShapeKind::Polygon:
      return static_cast<int>(shape.vertices.size());
  }
  return 64;
}

double radius_for_fraction(const DomainSpec& domain, double fraction) {
  return std::sqrt(fraction * domain.area() / kPi);
}

}  // namespace cavlab
