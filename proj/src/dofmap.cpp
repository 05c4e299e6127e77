#include "cavlab/dofmap.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cavlab/error.hpp"

namespace cavlab {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

DofMap DofMap::build(const Mesh& mesh) {
  DofMap d;
  d.n_vertices = static_cast<int>(mesh.vertices.size());
  d.tri_edges.resize(mesh.triangles.size());

  std::unordered_map<std::uint64_t, int> edge_id;
  std::vector<int> edge_uses;
  edge_id.reserve(3 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tv = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tv[k];
      const int b = tv[(k + 1) % 3];
      auto [it, inserted] = edge_id.try_emplace(edge_key(a, b), static_cast<int>(d.edge_vertices.size()));
      if (inserted) {
        d.edge_vertices.push_back({a, b});
        edge_uses.push_back(0);
      }
      ++edge_uses[it->second];
      d.tri_edges[t][k] = it->second;
    }
  }

  d.node_pos = mesh.vertices;
  d.node_pos.reserve(mesh.vertices.size() + d.edge_vertices.size());
  for (const auto& [a, b] : d.edge_vertices) {
    d.node_pos.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
  }
  d.node_tag.assign(d.node_pos.size(), -1);
  d.node_corner.assign(d.node_pos.size(), 0);

  std::vector<Point> first_normal(d.node_pos.size(), Point{0.0, 0.0});
  for (const BoundaryEdge& e : mesh.edges) {
    const auto it = edge_id.find(edge_key(e.a, e.b));
    if (it == edge_id.end()) throw MeshError("tagged edge is not a mesh edge");
    if (edge_uses[it->second] != 1) continue;  // interior interface
    BoundarySegment s;
    s.a = e.a;
    s.b = e.b;
    s.m = d.edge_node(it->second);
    s.tag = e.tag;
    const Point t = mesh.vertices[e.b] - mesh.vertices[e.a];
    s.length = norm(t);
    // Fluid on the left, so the outward normal points to the right.
    s.normal = (1.0 / s.length) * Point{t.y, -t.x};
    for (int n : {s.a, s.m, s.b}) {
      d.node_tag[n] = static_cast<std::int8_t>(e.tag);
    }
    for (int n : {s.a, s.b}) {
      if (first_normal[n] == Point{0.0, 0.0}) {
        first_normal[n] = s.normal;
      } else if (std::abs(cross(first_normal[n], s.normal)) > 1e-12) {
        d.node_corner[n] = 1;
      }
    }
    d.boundary.push_back(s);
  }
  return d;
}

std::array<int, 6> DofMap::tri_nodes(const Mesh& mesh, std::size_t t) const {
  const auto& tv = mesh.triangles[t];
  const auto& te = tri_edges[t];
  return {tv[0], tv[1], tv[2], edge_node(te[0]), edge_node(te[1]), edge_node(te[2])};
}

std::vector<int> DofMap::boundary_nodes(EdgeTag tag) const {
  std::vector<int> out;
  for (int n = 0; n < n_nodes(); ++n) {
    if (node_tag[n] == static_cast<std::int8_t>(tag)) out.push_back(n);
  }
  return out;
}

bool DofMap::has_boundary(EdgeTag tag) const {
  return std::any_of(boundary.begin(), boundary.end(),
                     [tag](const BoundarySegment& s) { return s.tag == tag; });
}

}  // namespace cavlab
