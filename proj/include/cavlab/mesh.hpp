#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cavlab/geometry.hpp"

namespace cavlab {

enum class EdgeTag : std::uint8_t { Outer = 0, Cavity = 1 };

std::string to_string(EdgeTag tag);
EdgeTag edge_tag_from_string(const std::string& s);

/// Tagged constrained edge, oriented so that the fluid lies on its left.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  EdgeTag tag = EdgeTag::Outer;
  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

/// Region label of a triangle: fluid (Omega \ D) or cavity interior (D).
enum class Region : std::uint8_t { Fluid = 0, Cavity = 1 };

/// Conforming triangulation. Triangles are counter-clockwise. `edges` holds the
/// constrained edges: the outer loop and, when a cavity is present, the cavity
/// loop. In a filled mesh the cavity loop is an interior interface and the
/// triangles inside it carry Region::Cavity.
struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> edges;
  std::vector<Region> region;
  double h_max = 0.0;
  int generation = 0;

  std::size_t n_vertices() const { return vertices.size(); }
  std::size_t n_triangles() const { return triangles.size(); }
  bool has_cavity_region() const;
  double triangle_area(std::size_t t) const;
  double total_area() const;
  std::size_t count_edges(EdgeTag tag) const;

  /// Triangles of one region, with vertices compacted. Constrained edges that
  /// border the kept triangles are retained.
  Mesh submesh(Region keep) const;
};

struct QualityReport {
  double min_angle = 0.0;
  double max_angle = 0.0;
  double h_max = 0.0;
  double h_min = 0.0;
  std::size_t n_vertices = 0;
  std::size_t n_triangles = 0;
};

struct TriangulateOptions {
  double h_target = 0.05;
  double min_angle = 25.0;
  /// Insertion budget as a multiple of the expected triangle count.
  double budget_factor = 20.0;
};

/// Delaunay refinement mesh of the full square with the cavity polygon (if
/// any) embedded as an interior constraint loop. Triangles inside the polygon
/// are labelled Region::Cavity.
Mesh triangulate_filled(const DomainSpec& domain, const std::optional<std::vector<Point>>& cavity,
                        const TriangulateOptions& options);

/// Mesh of Omega \ D (or Omega when no cavity is given).
Mesh triangulate(const DomainSpec& domain, const std::optional<std::vector<Point>>& cavity,
                 const TriangulateOptions& options);

/// Uniform red refinement: every triangle becomes four similar children.
Mesh refine(const Mesh& mesh);

QualityReport quality(const Mesh& mesh);

/// Longest edge of a triangle list.
double longest_edge(const Mesh& mesh);

/// Plain-text export; see README for the format.
void write_mesh(const Mesh& mesh, std::ostream& os);
Mesh read_mesh(std::istream& is);

/// Constrained edge loops in traversal order, one vector of edge indices per loop.
std::vector<std::vector<int>> boundary_loops(const Mesh& mesh, EdgeTag tag);

/// Structural checks used by tests and the acceptance suite.
struct MeshCheck {
  bool oriented = true;         // every triangle strictly counter-clockwise
  bool conforming = true;       // each edge has one or two triangles, Euler count holds
  bool boundary_tagged = true;  // boundary edges are exactly the tagged loops
  bool loops_closed = true;
  bool delaunay = true;  // no vertex strictly inside a neighbour's circumcircle
  std::size_t delaunay_violations = 0;
  std::string message;

  bool ok() const { return oriented && conforming && boundary_tagged && loops_closed && delaunay; }
};

MeshCheck check_mesh(const Mesh& mesh, bool require_delaunay = true);

}  // namespace cavlab
