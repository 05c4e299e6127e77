#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <unordered_map>

#include "cavlab/error.hpp"
#include "cavlab/fem.hpp"
#include "p2.hpp"

namespace cavlab {

namespace {

using Triplet = Eigen::Triplet<double>;

// P2 mass matrix of a straight boundary segment, local order (a, m, b).
constexpr double kEdgeMass[3][3] = {{4.0, 2.0, -1.0}, {2.0, 16.0, 2.0}, {-1.0, 2.0, 4.0}};

struct Gauss {
  std::vector<double> x;  // on [0, 1]
  std::vector<double> w;
};

Gauss gauss_legendre(int n) {
  // Newton iteration on P_n, mapped to [0, 1].
  Gauss g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    g.x[i] = 0.5 * (1.0 - z);
    g.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return g;
}

std::array<Point, 2> node_gradient(const StokesField& field, const std::array<int, 6>& nodes,
                                   const std::array<Point, 6>& g) {
  Point gx{};
  Point gy{};
  for (int i = 0; i < 6; ++i) {
    gx = gx + field.u[2 * nodes[i]] * g[i];
    gy = gy + field.u[2 * nodes[i] + 1] * g[i];
  }
  return {gx, gy};
}

std::vector<Point> clip_to_triangle(const std::vector<Point>& subject, const p2::Triangle& tri) {
  std::vector<Point> out = subject;
  std::vector<Point> in;
  for (int e = 0; e < 3 && !out.empty(); ++e) {
    const Point p = tri.v[e];
    const Point q = tri.v[(e + 1) % 3];
    const Point dir = q - p;
    in.swap(out);
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = in[i];
      const Point b = in[(i + 1) % n];
      const double sa = cross(dir, a - p);
      const double sb = cross(dir, b - p);
      if (sa >= 0.0) out.push_back(a);
      if ((sa >= 0.0) != (sb >= 0.0)) {
        const double t = sa / (sa - sb);
        out.push_back(a + t * (b - a));
      }
    }
  }
  return out;
}

bool polygon_convex(const std::vector<Point>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % n];
    const Point c = poly[(i + 2) % n];
    if (cross(b - a, c - b) < 0.0) return false;
  }
  return true;
}

}  // namespace

TractionTable cauchy_force_field(const FESystem& system, const BoundaryFunctional& functional) {
  const DofMap& d = system.dofs;
  const auto& nodes = functional.nodes;
  const int n = static_cast<int>(nodes.size());
  auto local = [&](int node) {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
    if (it == nodes.end() || *it != node) throw SolverError("traction: node outside the functional");
    return static_cast<int>(it - nodes.begin());
  };

  std::vector<Triplet> tm;
  for (const auto& seg : d.boundary) {
    if (seg.tag != functional.tag) continue;
    const int li[3] = {local(seg.a), local(seg.m), local(seg.b)};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) tm.emplace_back(li[i], li[j], seg.length / 30.0 * kEdgeMass[i][j]);
    }
  }
  SpMat M(n, n);
  M.setFromTriplets(tm.begin(), tm.end());
  Eigen::SimplicialLDLT<SpMat> ldlt(M);
  if (ldlt.info() != Eigen::Success) throw SolverError("singular boundary mass matrix");
  Eigen::VectorXd rx(n);
  Eigen::VectorXd ry(n);
  for (int i = 0; i < n; ++i) {
    rx[i] = functional.r[i].x;
    ry[i] = functional.r[i].y;
  }
  const Eigen::VectorXd px = ldlt.solve(rx);
  const Eigen::VectorXd py = ldlt.solve(ry);

  TractionTable t;
  t.tag = functional.tag;
  std::vector<char> seen(n, 0);
  double s = 0.0;
  int prev_end = -1;
  auto emit = [&](int node, double arc) {
    const int li = local(node);
    if (seen[li]) return;
    seen[li] = 1;
    t.nodes.push_back(node);
    t.pos.push_back(d.node_pos[node]);
    t.s.push_back(arc);
    t.psi.push_back({px[li], py[li]});
  };
  for (const auto& seg : d.boundary) {
    if (seg.tag != functional.tag) continue;
    if (seg.a != prev_end) s = 0.0;
    emit(seg.a, s);
    emit(seg.m, s + 0.5 * seg.length);
    s += seg.length;
    prev_end = seg.b;
  }
  return t;
}

double traction_pairing(const FESystem& system, const TractionTable& traction,
                        std::span<const Point> node_values) {
  std::unordered_map<int, std::size_t> at;
  at.reserve(traction.nodes.size());
  for (std::size_t i = 0; i < traction.nodes.size(); ++i) at.emplace(traction.nodes[i], i);
  double total = 0.0;
  for (const auto& seg : system.dofs.boundary) {
    if (seg.tag != traction.tag) continue;
    const int ln[3] = {seg.a, seg.m, seg.b};
    for (int i = 0; i < 3; ++i) {
      const Point psi = traction.psi[at.at(ln[i])];
      for (int j = 0; j < 3; ++j) {
        total += seg.length / 30.0 * kEdgeMass[i][j] * dot(psi, node_values[ln[j]]);
      }
    }
  }
  return total;
}

FieldEvaluator::FieldEvaluator(const FESystem& system, const StokesField& field)
    : system_(system), field_(field) {
  const Mesh& mesh = *system.mesh;
  Point lo{1e300, 1e300};
  Point hi{-1e300, -1e300};
  for (const Point& v : mesh.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  const int cells = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.n_triangles()))));
  lo_ = lo;
  cell_ = std::max(hi.x - lo.x, hi.y - lo.y) / cells * (1.0 + 1e-12);
  if (!(cell_ > 0.0)) cell_ = 1.0;
  nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / cell_)));
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    Point a{1e300, 1e300};
    Point b{-1e300, -1e300};
    for (int k = 0; k < 3; ++k) {
      const Point v = mesh.vertices[mesh.triangles[t][k]];
      a = {std::min(a.x, v.x), std::min(a.y, v.y)};
      b = {std::max(b.x, v.x), std::max(b.y, v.y)};
    }
    const int i0 = std::clamp(static_cast<int>((a.x - lo_.x) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((b.x - lo_.x) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((a.y - lo_.y) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((b.y - lo_.y) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
    }
  }
}

std::array<double, 3> FieldEvaluator::barycentric(int t, Point p) const {
  const Mesh& mesh = *system_.mesh;
  const auto& tv = mesh.triangles[t];
  const p2::Triangle tri(mesh.vertices[tv[0]], mesh.vertices[tv[1]], mesh.vertices[tv[2]]);
  return tri.barycentric(p);
}

int FieldEvaluator::locate(Point p) const {
  const int i = static_cast<int>(std::floor((p.x - lo_.x) / cell_));
  const int j = static_cast<int>(std::floor((p.y - lo_.y) / cell_));
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
  int best = -1;
  double best_min = -1e300;
  for (int t : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
    const auto l = barycentric(t, p);
    const double lmin = std::min({l[0], l[1], l[2]});
    if (lmin >= 0.0) return t;
    if (lmin > best_min) {
      best_min = lmin;
      best = t;
    }
  }
  return best_min >= -1e-10 ? best : -1;
}

Point FieldEvaluator::velocity(Point p) const {
  const int t = locate(p);
  if (t < 0) throw SolverError("evaluation point outside the mesh");
  const auto nodes = system_.dofs.tri_nodes(*system_.mesh, t);
  const auto phi = p2::values(barycentric(t, p));
  Point v{};
  for (int i = 0; i < 6; ++i) v = v + phi[i] * field_.velocity(nodes[i]);
  return v;
}

std::array<double, 4> FieldEvaluator::gradient(Point p) const {
  const int t = locate(p);
  if (t < 0) throw SolverError("evaluation point outside the mesh");
  const Mesh& mesh = *system_.mesh;
  const auto& tv = mesh.triangles[t];
  const p2::Triangle tri(mesh.vertices[tv[0]], mesh.vertices[tv[1]], mesh.vertices[tv[2]]);
  const auto g = node_gradient(field_, system_.dofs.tri_nodes(mesh, t), p2::gradients(tri, tri.barycentric(p)));
  return {g[0].x, g[0].y, g[1].x, g[1].y};
}

double FieldEvaluator::pressure(Point p) const {
  const int t = locate(p);
  if (t < 0) throw SolverError("evaluation point outside the mesh");
  const auto& tv = system_.mesh->triangles[t];
  const auto l = barycentric(t, p);
  return l[0] * field_.p[tv[0]] + l[1] * field_.p[tv[1]] + l[2] * field_.p[tv[2]];
}

double gradient_energy_on_region(const FESystem& system, const StokesField& field,
                                 const CavityShape& shape, int polygon_segments) {
  shape.validate();
  const Mesh& mesh = *system.mesh;
  std::vector<Point> poly = polygonalize(shape, polygon_segments);
  if (polygon_signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  const bool convex = shape.kind != ShapeKind::Polygon || polygon_convex(poly);

  Point lo{1e300, 1e300};
  Point hi{-1e300, -1e300};
  for (const Point& v : poly) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  Point mlo{1e300, 1e300};
  Point mhi{-1e300, -1e300};
  for (const Point& v : mesh.vertices) {
    mlo = {std::min(mlo.x, v.x), std::min(mlo.y, v.y)};
    mhi = {std::max(mhi.x, v.x), std::max(mhi.y, v.y)};
  }
  const double tol = 1e-12 * std::max(mhi.x - mlo.x, mhi.y - mlo.y);
  if (lo.x < mlo.x - tol || lo.y < mlo.y - tol || hi.x > mhi.x + tol || hi.y > mhi.y + tol) {
    throw GeometryError("region extends outside the mesh");
  }

  const auto& rule = p2::rule6();
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tv = mesh.triangles[t];
    const p2::Triangle tri(mesh.vertices[tv[0]], mesh.vertices[tv[1]], mesh.vertices[tv[2]]);
    const double tx0 = std::min({tri.v[0].x, tri.v[1].x, tri.v[2].x});
    const double tx1 = std::max({tri.v[0].x, tri.v[1].x, tri.v[2].x});
    const double ty0 = std::min({tri.v[0].y, tri.v[1].y, tri.v[2].y});
    const double ty1 = std::max({tri.v[0].y, tri.v[1].y, tri.v[2].y});
    if (tx1 < lo.x || tx0 > hi.x || ty1 < lo.y || ty0 > hi.y) continue;
    const auto nodes = system.dofs.tri_nodes(mesh, t);

    auto integrand = [&](Point x) {
      const auto g = node_gradient(field, nodes, p2::gradients(tri, tri.barycentric(x)));
      return dot(g[0], g[0]) + dot(g[1], g[1]);
    };

    if (convex && shape.contains(tri.v[0]) && shape.contains(tri.v[1]) && shape.contains(tri.v[2])) {
      for (const auto& q : rule) total += q.weight * tri.area() * integrand(tri.point(q.lambda));
      continue;
    }
    const std::vector<Point> piece = clip_to_triangle(poly, tri);
    for (std::size_t k = 1; k + 1 < piece.size(); ++k) {
      const p2::Triangle sub(piece[0], piece[k], piece[k + 1]);
      if (sub.jac == 0.0) continue;
      for (const auto& q : rule) total += q.weight * sub.area() * integrand(sub.point(q.lambda));
    }
  }
  return total;
}

double h32_norm(const DofMap& dofs, const BoundaryDatum& datum) {
  struct Seg {
    Point a;
    Point t;  // unit tangent
    double len;
    Point d0;  // g'(xi) = d0 + d1 xi, derivative in arc length
    Point d1;
  };
  const auto trace = nodal_trace(dofs, datum);
  std::vector<Seg> segs;
  std::vector<std::array<int, 2>> ends;
  double l2 = 0.0;
  double h1 = 0.0;
  double kernel = 0.0;
  const Gauss g3 = gauss_legendre(3);
  for (const auto& s : dofs.boundary) {
    if (s.tag != EdgeTag::Outer) continue;
    const Point ga = trace[s.a];
    const Point gm = trace[s.m];
    const Point gb = trace[s.b];
    Seg seg;
    seg.a = dofs.node_pos[s.a];
    seg.len = s.length;
    seg.t = (1.0 / s.length) * (dofs.node_pos[s.b] - dofs.node_pos[s.a]);
    seg.d0 = (1.0 / s.length) * (-3.0 * ga + 4.0 * gm - 1.0 * gb);
    seg.d1 = (1.0 / s.length) * (4.0 * ga - 8.0 * gm + 4.0 * gb);
    for (int q = 0; q < 3; ++q) {
      const double x = g3.x[q];
      const Point g = (1.0 - x) * (1.0 - 2.0 * x) * ga + 4.0 * x * (1.0 - x) * gm + x * (2.0 * x - 1.0) * gb;
      const Point dg = seg.d0 + x * seg.d1;
      l2 += g3.w[q] * s.length * dot(g, g);
      h1 += g3.w[q] * s.length * dot(dg, dg);
    }
    // Same segment: g' is linear, so the quotient is the constant g''.
    const Point g2 = (1.0 / s.length) * seg.d1;
    kernel += dot(g2, g2) * s.length * s.length;
    segs.push_back(seg);
    ends.push_back({s.a, s.b});
  }

  const Gauss far = gauss_legendre(4);
  const Gauss near = gauss_legendre(8);
  const std::size_t n = segs.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool touching = ends[i][0] == ends[j][0] || ends[i][0] == ends[j][1] ||
                            ends[i][1] == ends[j][0] || ends[i][1] == ends[j][1];
      const Gauss& g = touching ? near : far;
      const Seg& si = segs[i];
      const Seg& sj = segs[j];
      double acc = 0.0;
      for (std::size_t a = 0; a < g.x.size(); ++a) {
        const Point x = si.a + (g.x[a] * si.len) * si.t;
        const Point dx = si.d0 + g.x[a] * si.d1;
        for (std::size_t b = 0; b < g.x.size(); ++b) {
          const Point y = sj.a + (g.x[b] * sj.len) * sj.t;
          const Point diff = dx - (sj.d0 + g.x[b] * sj.d1);
          const Point r = x - y;
          acc += g.w[a] * g.w[b] * dot(diff, diff) / dot(r, r);
        }
      }
      kernel += 2.0 * acc * si.len * sj.len;
    }
  }
  return std::sqrt(l2 + h1 + kernel);
}

void write_field_table(const FESystem& system, const StokesField& field, std::ostream& os) {
  const DofMap& d = system.dofs;
  os << "x y u1 u2 p\n" << std::setprecision(17);
  for (int n = 0; n < d.n_nodes(); ++n) {
    double p = 0.0;
    if (n < d.n_vertices) {
      p = field.p[n];
    } else {
      const auto& e = d.edge_vertices[n - d.n_vertices];
      p = 0.5 * (field.p[e[0]] + field.p[e[1]]);
    }
    const Point x = d.node_pos[n];
    os << x.x << ' ' << x.y << ' ' << field.u[2 * n] << ' ' << field.u[2 * n + 1] << ' ' << p << '\n';
  }
}

void write_traction_table(const TractionTable& traction, std::ostream& os) {
  os << "s x y psi1 psi2\n" << std::setprecision(17);
  for (std::size_t i = 0; i < traction.nodes.size(); ++i) {
    os << traction.s[i] << ' ' << traction.pos[i].x << ' ' << traction.pos[i].y << ' ' << traction.psi[i].x
       << ' ' << traction.psi[i].y << '\n';
  }
}

}  // namespace cavlab
