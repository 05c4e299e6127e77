#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace cavlab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// A-priori constants of the outer domain. They are recorded, not derived.
struct AprioriConstants {
  double rho0 = 1.0;
  double m0 = 1.0;
  double m1 = 1.0;
};

/// Axis-aligned square outer domain [corner, corner + side]^2.
struct DomainSpec {
  double side = 1.0;
  Point corner{0.0, 0.0};
  std::string boundary_tag = "outer";
  AprioriConstants constants{};

  double area() const { return side * side; }
  double perimeter() const { return 4.0 * side; }
  Point upper() const { return {corner.x + side, corner.y + side}; }
  /// Distance from an interior point to the square boundary; negative outside.
  double inset(Point p) const;
  void validate() const;
};

enum class ShapeKind { Circle, Ellipse, Polygon };

/// The obstacle D. Ellipses carry semi-axes (a along the rotated x axis) and
/// a rotation angle in radians; polygons carry counter-clockwise vertices.
struct CavityShape {
  ShapeKind kind = ShapeKind::Circle;
  Point center{0.5, 0.5};
  double radius = 0.1;
  double semi_a = 0.0;
  double semi_b = 0.0;
  double angle = 0.0;
  std::vector<Point> vertices;
  /// Scale constant of the C^{2,alpha} boundary; <= 0 means "use the default".
  double rho = 0.0;

  static CavityShape circle(Point center, double radius);
  static CavityShape ellipse(Point center, double a, double b, double angle = 0.0);
  static CavityShape polygon(std::vector<Point> vertices);

  /// Throws GeometryError for non-positive sizes or non-simple polygons.
  void validate() const;
  double effective_rho() const;
  double diameter() const;
  bool contains(Point p) const;
};

double polygon_signed_area(std::span<const Point> poly);
bool polygon_is_simple(std::span<const Point> poly);
bool point_in_polygon(std::span<const Point> poly, Point p);

/// |D|: closed form for circles and ellipses, shoelace for polygons.
double cavity_area(const CavityShape& shape);

/// Signed distance from the cavity to the square boundary (no throwing).
double signed_boundary_distance(const DomainSpec& domain, const CavityShape& shape);

/// d(D, dOmega). Throws GeometryError if the cavity touches or crosses dOmega.
double boundary_distance(const DomainSpec& domain, const CavityShape& shape);

struct AssumptionLimits {
  double q_max = 10.0;
  double d0_min = 0.01;
};

struct AssumptionReport {
  double d0 = 0.0;
  double diam = 0.0;
  double rho = 0.0;
  double q = 0.0;
  double area = 0.0;
  bool h1 = false;
  bool h2 = false;
  bool h3 = false;
  std::string notes;

  bool all_pass() const { return h1 && h2 && h3; }
  friend bool operator==(const AssumptionReport&, const AssumptionReport&) = default;
};

/// Decides the domain, distance and fatness assumptions. Failed ones are reported, only malformed input throws.
AssumptionReport validate_assumptions(const DomainSpec& domain, const CavityShape& shape,
                                      const AssumptionLimits& limits = {});

/// Inscribed polygon with vertices uniformly spaced in the curve parameter,
/// counter-clockwise. Polygons are returned unchanged.
std::vector<Point> polygonalize(const CavityShape& shape, int n_segments);

/// Segment count used when meshing a curved cavity at resolution h.
int default_segment_count(const CavityShape& shape, double h_target);

/// Radius of the disk occupying `fraction` of the domain area.
double radius_for_fraction(const DomainSpec& domain, double fraction);

}  // namespace cavlab
