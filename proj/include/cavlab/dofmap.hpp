#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cavlab/mesh.hpp"

namespace cavlab {

/// Taylor-Hood node numbering. Velocity nodes are the mesh vertices followed
/// by the edge midpoints; velocity dof of (node, component) is 2*node+component.
/// Pressure dofs are the mesh vertices.
struct DofMap {
  /// Local P2 node order per triangle: v0, v1, v2, m01, m12, m20.
  struct BoundarySegment {
    int a = 0;  // start vertex node
    int m = 0;  // midpoint node
    int b = 0;  // end vertex node
    EdgeTag tag = EdgeTag::Outer;
    double length = 0.0;
    Point normal;  // outward unit normal of the fluid domain
  };

  int n_vertices = 0;
  std::vector<std::array<int, 2>> edge_vertices;
  std::vector<std::array<int, 3>> tri_edges;  // e01, e12, e20
  std::vector<Point> node_pos;
  /// -1 for interior nodes, otherwise the EdgeTag of the boundary it sits on.
  std::vector<std::int8_t> node_tag;
  /// Vertex nodes where two boundary segments with different normals meet.
  std::vector<std::uint8_t> node_corner;
  /// True boundary segments (one adjacent triangle), in loop order.
  std::vector<BoundarySegment> boundary;

  static DofMap build(const Mesh& mesh);

  int n_nodes() const { return static_cast<int>(node_pos.size()); }
  int n_velocity() const { return 2 * n_nodes(); }
  int n_pressure() const { return n_vertices; }
  int edge_node(int edge) const { return n_vertices + edge; }
  /// The six P2 nodes of triangle t in local order.
  std::array<int, 6> tri_nodes(const Mesh& mesh, std::size_t t) const;
  /// Sorted node indices on the boundary carrying `tag`.
  std::vector<int> boundary_nodes(EdgeTag tag) const;
  bool has_boundary(EdgeTag tag) const;
};

}  // namespace cavlab
