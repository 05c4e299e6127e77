// Delaunay refinement (Ruppert) over an incremental Bowyer-Watson
// triangulation. Constrained segments are enforced by splitting them at
// their midpoints whenever they are encroached or missing, so the final
// triangulation is Delaunay and contains every subsegment as an edge.

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "cavlab/error.hpp"
#include "cavlab/mesh.hpp"
#include "cavlab/predicates.hpp"

namespace cavlab {

namespace {

using predicates::incircle;
using predicates::orient2d;

constexpr int kSuper = 3;  // the first three vertices span the super triangle

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> nb{-1, -1, -1};  // nb[i] lies across the edge opposite v[i]
  bool alive = true;
};

struct Segment {
  int a = 0;
  int b = 0;
  EdgeTag tag = EdgeTag::Outer;
  bool alive = true;
};

class Refiner {
 public:
  Refiner(const DomainSpec& domain, const TriangulateOptions& options)
      : domain_(domain), options_(options) {
    const double s = domain.side;
    const Point c = domain.corner + Point{0.5 * s, 0.5 * s};
    const double big = 64.0 * s;
    pts_ = {{c.x - big, c.y - big}, {c.x + big, c.y - big}, {c.x, c.y + big}};
    vtri_ = {0, 0, 0};
    tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}, true});
    const double deg = options.min_angle * std::numbers::pi / 180.0;
    cos_min_angle_ = std::cos(deg);
  }

  int insert_point(Point p);
  void add_segment(int a, int b, EdgeTag tag);
  void set_budget(std::size_t budget) { budget_ = budget; }
  void refine();
  Mesh extract(const std::optional<std::vector<Point>>& cavity) const;

 private:
  int locate(Point p) const;
  bool find_edge(int a, int b, int& tri, int& local) const;
  bool encroached(const Segment& s) const;
  void split_segment(int id);
  bool in_domain(int t) const;
  bool is_bad(int t) const;
  void count_insertion(Point where);

  const DomainSpec domain_;
  const TriangulateOptions options_;
  double cos_min_angle_ = 1.0;

  std::vector<Point> pts_;
  std::vector<Tri> tris_;
  std::vector<int> vtri_;
  int last_ = 0;

  std::vector<int> mark_;
  int stamp_ = 0;

  std::vector<Segment> segments_;
  std::unordered_map<std::uint64_t, int> seg_index_;
  std::deque<int> seg_queue_;
  std::deque<int> tri_queue_;

  std::size_t insertions_ = 0;
  std::size_t budget_ = 0;
};

int Refiner::locate(Point p) const {
  int t = last_;
  if (t < 0 || t >= static_cast<int>(tris_.size()) || !tris_[t].alive) {
    t = static_cast<int>(tris_.size()) - 1;
    while (t > 0 && !tris_[t].alive) --t;
  }
  const std::size_t max_steps = 4 * tris_.size() + 64;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Tri& tri = tris_[t];
    bool moved = false;
    for (int k = 0; k < 3; ++k) {
      const int i = static_cast<int>((k + step) % 3);
      const Point a = pts_[tri.v[(i + 1) % 3]];
      const Point b = pts_[tri.v[(i + 2) % 3]];
      if (orient2d(a, b, p) < 0.0) {
        if (tri.nb[i] < 0) throw MeshError("point lies outside the enclosing triangle");
        t = tri.nb[i];
        moved = true;
        break;
      }
    }
    if (!moved) return t;
  }
  // Walk failed to settle; fall back to a scan.
  for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
    const Tri& tri = tris_[i];
    if (!tri.alive) continue;
    if (orient2d(pts_[tri.v[0]], pts_[tri.v[1]], p) >= 0.0 &&
        orient2d(pts_[tri.v[1]], pts_[tri.v[2]], p) >= 0.0 &&
        orient2d(pts_[tri.v[2]], pts_[tri.v[0]], p) >= 0.0) {
      return i;
    }
  }
  throw MeshError("point location failed");
}

int Refiner::insert_point(Point p) {
  const int t0 = locate(p);
  for (int vi : tris_[t0].v) {
    if (pts_[vi] == p) return vi;
  }

  const int v = static_cast<int>(pts_.size());
  pts_.push_back(p);
  vtri_.push_back(-1);

  if (mark_.size() < tris_.size()) mark_.resize(tris_.size() * 2, 0);
  ++stamp_;
  std::vector<int> cavity{t0};
  std::vector<std::pair<int, int>> rim;  // (cavity triangle, local edge index)
  mark_[t0] = stamp_;
  for (std::size_t k = 0; k < cavity.size(); ++k) {
    const int c = cavity[k];
    for (int i = 0; i < 3; ++i) {
      const int n = tris_[c].nb[i];
      if (n >= 0 && mark_[n] == stamp_) continue;
      if (n >= 0) {
        const Tri& nt = tris_[n];
        if (incircle(pts_[nt.v[0]], pts_[nt.v[1]], pts_[nt.v[2]], p) > 0.0) {
          mark_[n] = stamp_;
          cavity.push_back(n);
          continue;
        }
      }
      rim.emplace_back(c, i);
    }
  }

  // Segments strictly inside the cavity disappear and must be re-examined.
  for (int c : cavity) {
    const Tri& tri = tris_[c];
    for (int i = 0; i < 3; ++i) {
      const int n = tri.nb[i];
      if (n < 0 || mark_[n] != stamp_ || n < c) continue;
      const int a = tri.v[(i + 1) % 3];
      const int b = tri.v[(i + 2) % 3];
      if (auto it = seg_index_.find(edge_key(a, b)); it != seg_index_.end()) {
        seg_queue_.push_back(it->second);
      }
    }
  }

  std::unordered_map<int, int> by_first;
  std::unordered_map<int, int> by_second;
  std::vector<int> created;
  created.reserve(rim.size());
  for (const auto& [c, i] : rim) {
    const int a = tris_[c].v[(i + 1) % 3];
    const int b = tris_[c].v[(i + 2) % 3];
    const int outside = tris_[c].nb[i];
    const int nt = static_cast<int>(tris_.size());
    tris_.push_back(Tri{{a, b, v}, {-1, -1, outside}, true});
    if (outside >= 0) {
      for (int& nb : tris_[outside].nb) {
        if (nb == c) {
          nb = nt;
          break;
        }
      }
    }
    by_first[a] = nt;
    by_second[b] = nt;
    created.push_back(nt);
  }
  for (int nt : created) {
    Tri& tri = tris_[nt];
    tri.nb[0] = by_first.at(tri.v[1]);
    tri.nb[1] = by_second.at(tri.v[0]);
  }
  for (int c : cavity) tris_[c].alive = false;
  for (int nt : created) {
    for (int vi : tris_[nt].v) vtri_[vi] = nt;
    const Tri& tri = tris_[nt];
    if (auto it = seg_index_.find(edge_key(tri.v[0], tri.v[1])); it != seg_index_.end()) {
      seg_queue_.push_back(it->second);
    }
    tri_queue_.push_back(nt);
  }
  last_ = created.front();
  return v;
}

void Refiner::add_segment(int a, int b, EdgeTag tag) {
  const int id = static_cast<int>(segments_.size());
  segments_.push_back(Segment{a, b, tag, true});
  seg_index_[edge_key(a, b)] = id;
  seg_queue_.push_back(id);
}

bool Refiner::find_edge(int a, int b, int& tri, int& local) const {
  const int start = vtri_[a];
  int t = start;
  for (std::size_t guard = 0; guard < tris_.size(); ++guard) {
    const Tri& cur = tris_[t];
    int ia = 0;
    while (cur.v[ia] != a) ++ia;
    if (cur.v[(ia + 1) % 3] == b) {
      tri = t;
      local = (ia + 2) % 3;
      return true;
    }
    if (cur.v[(ia + 2) % 3] == b) {
      tri = t;
      local = (ia + 1) % 3;
      return true;
    }
    t = cur.nb[(ia + 1) % 3];
    if (t < 0 || t == start) return false;
  }
  return false;
}

bool Refiner::encroached(const Segment& s) const {
  int t = 0;
  int i = 0;
  if (!find_edge(s.a, s.b, t, i)) return true;
  const Point pa = pts_[s.a];
  const Point pb = pts_[s.b];
  auto apex_inside = [&](int apex) {
    if (apex < kSuper) return false;
    const Point pc = pts_[apex];
    return dot(pa - pc, pb - pc) < 0.0;
  };
  if (apex_inside(tris_[t].v[i])) return true;
  const int n = tris_[t].nb[i];
  if (n >= 0) {
    for (int k = 0; k < 3; ++k) {
      if (tris_[n].nb[k] == t) return apex_inside(tris_[n].v[k]);
    }
  }
  return false;
}

void Refiner::count_insertion(Point where) {
  if (++insertions_ > budget_) {
    std::ostringstream msg;
    msg << "mesh quality unreachable: insertion budget " << budget_ << " exhausted near ("
        << where.x << ", " << where.y << ")";
    throw MeshError(msg.str());
  }
}

void Refiner::split_segment(int id) {
  const Segment s = segments_[id];
  segments_[id].alive = false;
  seg_index_.erase(edge_key(s.a, s.b));
  const Point m = 0.5 * (pts_[s.a] + pts_[s.b]);
  count_insertion(m);
  const int v = insert_point(m);
  if (v == s.a || v == s.b) {
    throw MeshError("segment too short to split in floating point");
  }
  add_segment(s.a, v, s.tag);
  add_segment(v, s.b, s.tag);
}

bool Refiner::in_domain(int t) const {
  const Tri& tri = tris_[t];
  for (int vi : tri.v) {
    if (vi < kSuper) return false;
  }
  const Point c = (1.0 / 3.0) * (pts_[tri.v[0]] + pts_[tri.v[1]] + pts_[tri.v[2]]);
  return domain_.inset(c) > 0.0;
}

bool Refiner::is_bad(int t) const {
  const Tri& tri = tris_[t];
  const Point p0 = pts_[tri.v[0]], p1 = pts_[tri.v[1]], p2 = pts_[tri.v[2]];
  std::array<double, 3> l2{dot(p1 - p2, p1 - p2), dot(p2 - p0, p2 - p0), dot(p0 - p1, p0 - p1)};
  std::sort(l2.begin(), l2.end());
  const double h = options_.h_target;
  if (l2[2] > h * h * (1.0 + 1e-12)) return true;
  // Smallest angle is opposite the shortest edge.
  const double cos_small = (l2[1] + l2[2] - l2[0]) / (2.0 * std::sqrt(l2[1] * l2[2]));
  return cos_small > cos_min_angle_;
}

void Refiner::refine() {
  for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
    if (tris_[t].alive) tri_queue_.push_back(t);
  }
  std::vector<int> hit;
  while (true) {
    while (!seg_queue_.empty()) {
      const int id = seg_queue_.front();
      seg_queue_.pop_front();
      if (segments_[id].alive && encroached(segments_[id])) split_segment(id);
    }
    if (tri_queue_.empty()) break;
    const int t = tri_queue_.front();
    tri_queue_.pop_front();
    if (!tris_[t].alive || !in_domain(t) || !is_bad(t)) continue;

    const Tri& tri = tris_[t];
    const Point c = predicates::circumcenter(pts_[tri.v[0]], pts_[tri.v[1]], pts_[tri.v[2]]);
    hit.clear();
    for (int id = 0; id < static_cast<int>(segments_.size()); ++id) {
      const Segment& s = segments_[id];
      if (!s.alive) continue;
      const Point pa = pts_[s.a];
      const Point pb = pts_[s.b];
      if (dot(pa - c, pb - c) < 0.0) hit.push_back(id);
    }
    if (!hit.empty()) {
      for (int id : hit) {
        if (segments_[id].alive) split_segment(id);
      }
      if (tris_[t].alive) tri_queue_.push_back(t);
      continue;
    }
    if (domain_.inset(c) <= 0.0) continue;
    count_insertion(c);
    insert_point(c);
  }
}

Mesh Refiner::extract(const std::optional<std::vector<Point>>& cavity) const {
  Mesh mesh;
  mesh.vertices.assign(pts_.begin() + kSuper, pts_.end());

  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_tris;
  for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
    if (!tris_[t].alive || !in_domain(t)) continue;
    const Tri& tri = tris_[t];
    const int id = static_cast<int>(mesh.triangles.size());
    mesh.triangles.push_back({tri.v[0] - kSuper, tri.v[1] - kSuper, tri.v[2] - kSuper});
    Region r = Region::Fluid;
    if (cavity) {
      const Point c = (1.0 / 3.0) * (pts_[tri.v[0]] + pts_[tri.v[1]] + pts_[tri.v[2]]);
      if (point_in_polygon(*cavity, c)) r = Region::Cavity;
    }
    mesh.region.push_back(r);
    for (int i = 0; i < 3; ++i) {
      auto [it, inserted] = edge_tris.try_emplace(
          edge_key(tri.v[(i + 1) % 3] - kSuper, tri.v[(i + 2) % 3] - kSuper),
          std::array<int, 2>{id, -1});
      if (!inserted) it->second[1] = id;
    }
  }

  for (const Segment& s : segments_) {
    if (!s.alive) continue;
    const int a = s.a - kSuper;
    const int b = s.b - kSuper;
    const auto it = edge_tris.find(edge_key(a, b));
    if (it == edge_tris.end()) throw MeshError("constrained segment missing from triangulation");
    int owner = it->second[0];
    if (it->second[1] >= 0 && mesh.region[owner] != Region::Fluid) owner = it->second[1];
    const auto& tv = mesh.triangles[owner];
    int ia = 0;
    while (tv[ia] != a) ++ia;
    if (tv[(ia + 1) % 3] == b) {
      mesh.edges.push_back({a, b, s.tag});
    } else {
      mesh.edges.push_back({b, a, s.tag});
    }
  }

  // Store the constrained edges in loop order.
  std::vector<BoundaryEdge> ordered;
  ordered.reserve(mesh.edges.size());
  for (EdgeTag tag : {EdgeTag::Outer, EdgeTag::Cavity}) {
    for (const auto& loop : boundary_loops(mesh, tag)) {
      for (int e : loop) ordered.push_back(mesh.edges[e]);
    }
  }
  if (ordered.size() != mesh.edges.size()) throw MeshError("constrained edges do not form loops");
  mesh.edges = std::move(ordered);
  mesh.h_max = longest_edge(mesh);
  return mesh;
}

}  // namespace

Mesh triangulate_filled(const DomainSpec& domain, const std::optional<std::vector<Point>>& cavity,
                        const TriangulateOptions& options) {
  domain.validate();
  if (!(options.h_target > 0.0)) throw MeshError("h_target must be positive");
  if (!(options.min_angle > 0.0) || options.min_angle > 33.0) {
    throw MeshError("min_angle must lie in (0, 33] degrees");
  }
  if (cavity) {
    if (cavity->size() < 3 || !polygon_is_simple(*cavity)) {
      throw GeometryError("cavity polygon must be simple with at least 3 vertices");
    }
    for (const Point& p : *cavity) {
      if (!(domain.inset(p) > 0.0)) {
        throw GeometryError("cavity polygon is not strictly inside the domain");
      }
    }
  }

  Refiner refiner(domain, options);
  const Point lo = domain.corner;
  const Point hi = domain.upper();
  const std::array<Point, 4> corners{lo, Point{hi.x, lo.y}, hi, Point{lo.x, hi.y}};
  std::array<int, 4> cid{};
  for (int i = 0; i < 4; ++i) cid[i] = refiner.insert_point(corners[i]);

  std::vector<int> pid;
  if (cavity) {
    std::vector<Point> poly = *cavity;
    if (polygon_signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
    for (const Point& p : poly) pid.push_back(refiner.insert_point(p));
  }

  for (int i = 0; i < 4; ++i) refiner.add_segment(cid[i], cid[(i + 1) % 4], EdgeTag::Outer);
  for (std::size_t i = 0; i < pid.size(); ++i) {
    refiner.add_segment(pid[i], pid[(i + 1) % pid.size()], EdgeTag::Cavity);
  }

  const double cells = std::ceil(domain.side / options.h_target);
  const double expected = 2.0 * cells * cells + 8.0 * static_cast<double>(pid.size()) + 16.0;
  refiner.set_budget(static_cast<std::size_t>(options.budget_factor * expected));
  refiner.refine();
  return refiner.extract(cavity);
}

Mesh triangulate(const DomainSpec& domain, const std::optional<std::vector<Point>>& cavity,
                 const TriangulateOptions& options) {
  Mesh filled = triangulate_filled(domain, cavity, options);
  if (!cavity) return filled;
  return filled.submesh(Region::Fluid);
}

}  // namespace cavlab
