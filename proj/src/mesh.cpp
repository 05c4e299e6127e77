#include "cavlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "cavlab/error.hpp"
#include "cavlab/predicates.hpp"

namespace cavlab {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double angle_deg(Point at, Point p, Point q) {
  const Point u = p - at;
  const Point v = q - at;
  return std::atan2(std::abs(cross(u, v)), dot(u, v)) * 180.0 / std::numbers::pi;
}

}  // namespace

std::string to_string(EdgeTag tag) { return tag == EdgeTag::Outer ? "outer" : "cavity"; }

EdgeTag edge_tag_from_string(const std::string& s) {
  if (s == "outer") return EdgeTag::Outer;
  if (s == "cavity") return EdgeTag::Cavity;
  throw MeshError("unknown edge tag: " + s);
}

bool Mesh::has_cavity_region() const {
  return std::any_of(region.begin(), region.end(), [](Region r) { return r == Region::Cavity; });
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& tv = triangles[t];
  return 0.5 * cross(vertices[tv[1]] - vertices[tv[0]], vertices[tv[2]] - vertices[tv[0]]);
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

std::size_t Mesh::count_edges(EdgeTag tag) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [tag](const BoundaryEdge& e) { return e.tag == tag; }));
}

Mesh Mesh::submesh(Region keep) const {
  Mesh out;
  out.generation = generation;
  std::vector<int> remap(vertices.size(), -1);
  std::unordered_map<std::uint64_t, int> edge_count;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Region r = region.empty() ? Region::Fluid : region[t];
    if (r != keep) continue;
    std::array<int, 3> tv{};
    for (int i = 0; i < 3; ++i) {
      int& m = remap[triangles[t][i]];
      if (m < 0) {
        m = static_cast<int>(out.vertices.size());
        out.vertices.push_back(vertices[triangles[t][i]]);
      }
      tv[i] = m;
    }
    for (int i = 0; i < 3; ++i) ++edge_count[edge_key(tv[i], tv[(i + 1) % 3])];
    out.triangles.push_back(tv);
    out.region.push_back(keep);
  }
  for (const BoundaryEdge& e : edges) {
    const int a = remap[e.a];
    const int b = remap[e.b];
    if (a < 0 || b < 0) continue;
    if (edge_count.find(edge_key(a, b)) == edge_count.end()) continue;
    out.edges.push_back({a, b, e.tag});
  }
  // Fluid-on-the-left orientation is inherited; flip edges for the cavity side.
  if (keep == Region::Cavity) {
    for (BoundaryEdge& e : out.edges) std::swap(e.a, e.b);
  }
  out.h_max = longest_edge(out);
  return out;
}

double longest_edge(const Mesh& mesh) {
  double h = 0.0;
  for (const auto& tv : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      h = std::max(h, distance(mesh.vertices[tv[i]], mesh.vertices[tv[(i + 1) % 3]]));
    }
  }
  return h;
}

Mesh refine(const Mesh& mesh) {
  Mesh out;
  out.vertices = mesh.vertices;
  out.generation = mesh.generation + 1;
  std::unordered_map<std::uint64_t, int> midpoint;
  auto mid = [&](int a, int b) {
    auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), 0);
    if (inserted) {
      it->second = static_cast<int>(out.vertices.size());
      out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    }
    return it->second;
  };
  out.triangles.reserve(4 * mesh.triangles.size());
  out.region.reserve(4 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto [v0, v1, v2] = mesh.triangles[t];
    const int m01 = mid(v0, v1);
    const int m12 = mid(v1, v2);
    const int m20 = mid(v2, v0);
    const Region r = mesh.region.empty() ? Region::Fluid : mesh.region[t];
    for (const auto& child : {std::array<int, 3>{v0, m01, m20}, std::array<int, 3>{m01, v1, m12},
                              std::array<int, 3>{m20, m12, v2}, std::array<int, 3>{m01, m12, m20}}) {
      out.triangles.push_back(child);
      out.region.push_back(r);
    }
  }
  out.edges.reserve(2 * mesh.edges.size());
  for (const BoundaryEdge& e : mesh.edges) {
    const int m = mid(e.a, e.b);
    out.edges.push_back({e.a, m, e.tag});
    out.edges.push_back({m, e.b, e.tag});
  }
  out.h_max = longest_edge(out);
  return out;
}

QualityReport quality(const Mesh& mesh) {
  QualityReport q;
  q.n_vertices = mesh.vertices.size();
  q.n_triangles = mesh.triangles.size();
  if (mesh.triangles.empty()) return q;
  q.min_angle = 180.0;
  q.h_min = std::numeric_limits<double>::infinity();
  for (const auto& tv : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const Point a = mesh.vertices[tv[i]];
      const Point b = mesh.vertices[tv[(i + 1) % 3]];
      const Point c = mesh.vertices[tv[(i + 2) % 3]];
      const double ang = angle_deg(a, b, c);
      q.min_angle = std::min(q.min_angle, ang);
      q.max_angle = std::max(q.max_angle, ang);
      const double len = distance(a, b);
      q.h_min = std::min(q.h_min, len);
      q.h_max = std::max(q.h_max, len);
    }
  }
  return q;
}

void write_mesh(const Mesh& mesh, std::ostream& os) {
  os << "vertices " << mesh.vertices.size() << " / triangles " << mesh.triangles.size() << " / edges "
     << mesh.edges.size() << "\n";
  os << std::setprecision(17);
  for (const Point& p : mesh.vertices) os << p.x << " " << p.y << "\n";
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tv = mesh.triangles[t];
    const int r = mesh.region.empty() ? 0 : static_cast<int>(mesh.region[t]);
    os << tv[0] << " " << tv[1] << " " << tv[2] << " " << r << "\n";
  }
  for (const BoundaryEdge& e : mesh.edges) os << e.a << " " << e.b << " " << to_string(e.tag) << "\n";
}

Mesh read_mesh(std::istream& is) {
  std::string kv, kt, ke, s1, s2;
  std::size_t nv = 0, nt = 0, ne = 0;
  if (!(is >> kv >> nv >> s1 >> kt >> nt >> s2 >> ke >> ne) || kv != "vertices" || kt != "triangles" ||
      ke != "edges" || s1 != "/" || s2 != "/") {
    throw MeshError("malformed mesh header");
  }
  Mesh mesh;
  mesh.vertices.resize(nv);
  for (Point& p : mesh.vertices) is >> p.x >> p.y;
  mesh.triangles.resize(nt);
  mesh.region.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    int r = 0;
    is >> mesh.triangles[t][0] >> mesh.triangles[t][1] >> mesh.triangles[t][2] >> r;
    if (r != 0 && r != 1) throw MeshError("bad region label in mesh file");
    mesh.region[t] = static_cast<Region>(r);
  }
  mesh.edges.resize(ne);
  for (BoundaryEdge& e : mesh.edges) {
    std::string tag;
    if (!(is >> e.a >> e.b >> tag)) break;
    e.tag = edge_tag_from_string(tag);
  }
  if (!is) throw MeshError("truncated mesh file");
  auto valid = [nv](int v) { return v >= 0 && static_cast<std::size_t>(v) < nv; };
  for (const auto& t : mesh.triangles) {
    if (!valid(t[0]) || !valid(t[1]) || !valid(t[2])) throw MeshError("triangle index out of range");
  }
  for (const BoundaryEdge& e : mesh.edges) {
    if (!valid(e.a) || !valid(e.b)) throw MeshError("edge index out of range");
  }
  mesh.h_max = longest_edge(mesh);
  return mesh;
}

std::vector<std::vector<int>> boundary_loops(const Mesh& mesh, EdgeTag tag) {
  std::map<int, int> next_edge;  // start vertex -> edge index
  for (int i = 0; i < static_cast<int>(mesh.edges.size()); ++i) {
    if (mesh.edges[i].tag != tag) continue;
    if (!next_edge.emplace(mesh.edges[i].a, i).second) {
      throw MeshError("constrained edges branch at vertex " + std::to_string(mesh.edges[i].a));
    }
  }
  std::vector<std::vector<int>> loops;
  std::vector<char> used(mesh.edges.size(), 0);
  // Start each loop at its lowest vertex index for a canonical order.
  for (const auto& [start, first] : next_edge) {
    if (used[first]) continue;
    std::vector<int> loop;
    int e = first;
    while (!used[e]) {
      used[e] = 1;
      loop.push_back(e);
      const auto it = next_edge.find(mesh.edges[e].b);
      if (it == next_edge.end()) throw MeshError("open constrained edge chain");
      e = it->second;
    }
    if (e != first) throw MeshError("constrained edge chain does not close");
    loops.push_back(std::move(loop));
  }
  return loops;
}

MeshCheck check_mesh(const Mesh& mesh, bool require_delaunay) {
  MeshCheck c;
  std::ostringstream msg;
  const auto& P = mesh.vertices;

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tv = mesh.triangles[t];
    if (!(predicates::orient2d(P[tv[0]], P[tv[1]], P[tv[2]]) > 0.0)) {
      c.oriented = false;
      msg << "triangle " << t << " not positively oriented; ";
      break;
    }
  }

  // Directed half-edges: each must appear once; its twin at most once.
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges;  // key -> (tri, opposite vertex)
  std::unordered_map<std::uint64_t, std::array<int, 2>> twins;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tv = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const int a = tv[(i + 1) % 3];
      const int b = tv[(i + 2) % 3];
      const std::uint64_t key = edge_key(a, b);
      auto [it, inserted] = edges.try_emplace(key, std::array<int, 2>{static_cast<int>(t), tv[i]});
      if (!inserted) {
        if (!twins.try_emplace(key, std::array<int, 2>{static_cast<int>(t), tv[i]}).second) {
          c.conforming = false;
          msg << "edge shared by more than two triangles; ";
        }
      }
    }
  }

  std::unordered_map<std::uint64_t, EdgeTag> tagged;
  for (const BoundaryEdge& e : mesh.edges) tagged[edge_key(e.a, e.b)] = e.tag;

  std::size_t boundary_count = 0;
  for (const auto& [key, first] : edges) {
    const bool interior = twins.count(key) > 0;
    if (!interior) {
      ++boundary_count;
      if (!tagged.count(key)) {
        c.boundary_tagged = false;
        msg << "untagged boundary edge; ";
        break;
      }
    }
  }
  for (const auto& [key, tag] : tagged) {
    if (!edges.count(key)) {
      c.boundary_tagged = false;
      msg << "tagged edge missing from triangulation; ";
      break;
    }
  }

  // Euler characteristic: V - E + F = 2 - (#boundary loops) for a planar region.
  std::size_t n_loops = 0;
  try {
    for (EdgeTag tag : {EdgeTag::Outer, EdgeTag::Cavity}) {
      for (const auto& loop : boundary_loops(mesh, tag)) {
        bool is_boundary = false;
        for (int e : loop) {
          if (!twins.count(edge_key(mesh.edges[e].a, mesh.edges[e].b))) is_boundary = true;
        }
        if (is_boundary) ++n_loops;
      }
    }
  } catch (const MeshError& e) {
    c.loops_closed = false;
    msg << e.what() << "; ";
  }
  const long euler = static_cast<long>(P.size()) - static_cast<long>(edges.size()) +
                     static_cast<long>(mesh.triangles.size());
  if (c.loops_closed && euler != 2 - static_cast<long>(n_loops)) {
    c.conforming = false;
    msg << "Euler characteristic " << euler << " does not match " << n_loops << " loops; ";
  }
  (void)boundary_count;

  if (require_delaunay) {
    for (const auto& [key, twin] : twins) {
      const auto& first = edges.at(key);
      const auto& tv = mesh.triangles[first[0]];
      if (predicates::incircle(P[tv[0]], P[tv[1]], P[tv[2]], P[twin[1]]) > 0.0) {
        ++c.delaunay_violations;
      }
    }
    if (c.delaunay_violations > 0) {
      c.delaunay = false;
      msg << c.delaunay_violations << " non-Delaunay edges; ";
    }
  }
  c.message = msg.str();
  return c;
}

}  // namespace cavlab
