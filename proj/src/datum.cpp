#include "cavlab/datum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cavlab/error.hpp"

namespace cavlab {

namespace {

constexpr double kSideTol = 1e-12;

// Gauss-Legendre, 3 points on [0, 1].
constexpr std::array<double, 3> kGaussX{0.1127016653792583, 0.5, 0.8872983346207417};
constexpr std::array<double, 3> kGaussW{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

std::vector<Side> preset_vanishing(const DatumTerm& term) {
  const std::string& p = term.preset;
  if (p == "tangential-top" || p == "bump-top") return {Side::Bottom, Side::Right, Side::Left};
  if (p == "tangential-bottom") return {Side::Right, Side::Top, Side::Left};
  if (p == "tangential-left") return {Side::Bottom, Side::Right, Side::Top};
  if (p == "tangential-right") return {Side::Bottom, Side::Top, Side::Left};
  if (p == "poiseuille-trace" || p == "inflow-outflow") return {Side::Bottom, Side::Top};
  if (p == "constant") {
    if (term.value == Point{0.0, 0.0} || term.amplitude == 0.0) {
      return {Side::Bottom, Side::Right, Side::Top, Side::Left};
    }
    return {};
  }
  throw DatumError("unknown datum preset: " + p);
}

Point evaluate_term(const DatumTerm& term, double s, double t) {
  const double a = term.amplitude;
  const std::string& p = term.preset;
  const bool top = std::abs(t - 1.0) <= kSideTol;
  const bool bottom = std::abs(t) <= kSideTol;
  const bool left = std::abs(s) <= kSideTol;
  const bool right = std::abs(s - 1.0) <= kSideTol;
  if (p == "tangential-top") return top ? Point{a * s * (1.0 - s), 0.0} : Point{};
  if (p == "tangential-bottom") return bottom ? Point{a * s * (1.0 - s), 0.0} : Point{};
  if (p == "tangential-left") return left ? Point{0.0, a * t * (1.0 - t)} : Point{};
  if (p == "tangential-right") return right ? Point{0.0, a * t * (1.0 - t)} : Point{};
  if (p == "poiseuille-trace" || p == "inflow-outflow") return {a * t * (1.0 - t), 0.0};
  if (p == "bump-top") {
    const double q = s * (1.0 - s);
    return top ? Point{16.0 * a * q * q, 0.0} : Point{};
  }
  if (p == "constant") return a * term.value;
  throw DatumError("unknown datum preset: " + p);
}

std::size_t index_of(const std::vector<int>& nodes, int node) {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node) throw DatumError("node is not an outer boundary node");
  return static_cast<std::size_t>(it - nodes.begin());
}

}  // namespace

std::string to_string(Side side) {
  switch (side) {
    case Side::Bottom:
      return "bottom";
    case Side::Right:
      return "right";
    case Side::Top:
      return "top";
    case Side::Left:
      return "left";
  }
  return "?";
}

const std::vector<std::string>& known_presets() {
  static const std::vector<std::string> presets{
      "tangential-top", "tangential-bottom", "tangential-left", "tangential-right",
      "poiseuille-trace", "inflow-outflow", "bump-top", "constant"};
  return presets;
}

DatumSpec DatumSpec::preset(const std::string& name, double amplitude, Point value) {
  const auto& names = known_presets();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw DatumError("unknown datum preset: " + name);
  }
  DatumSpec spec;
  spec.terms.push_back(DatumTerm{name, amplitude, value, 1.0});
  return spec;
}

DatumSpec DatumSpec::combination(std::span<const DatumSpec> parts, std::span<const double> weights) {
  if (parts.size() != weights.size()) throw DatumError("combination: size mismatch");
  DatumSpec out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (DatumTerm term : parts[i].terms) {
      term.weight *= weights[i];
      out.terms.push_back(term);
    }
  }
  return out;
}

DatumSpec DatumSpec::scaled(double s) const {
  DatumSpec out = *this;
  for (DatumTerm& t : out.terms) t.weight *= s;
  return out;
}

Point DatumSpec::evaluate(const DomainSpec& domain, Point p) const {
  const double s = (p.x - domain.corner.x) / domain.side;
  const double t = (p.y - domain.corner.y) / domain.side;
  Point g{};
  for (const DatumTerm& term : terms) g = g + term.weight * evaluate_term(term, s, t);
  return g;
}

std::vector<Side> DatumSpec::vanishing_sides() const {
  std::vector<Side> common{Side::Bottom, Side::Right, Side::Top, Side::Left};
  for (const DatumTerm& term : terms) {
    if (term.weight == 0.0) continue;
    const std::vector<Side> v = preset_vanishing(term);
    std::erase_if(common, [&](Side s) { return std::find(v.begin(), v.end(), s) == v.end(); });
  }
  return common;
}

std::string DatumSpec::id() const {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) os << "+";
    const DatumTerm& t = terms[i];
    if (t.weight != 1.0) os << t.weight << "*";
    os << t.preset;
    if (t.amplitude != 1.0) os << "(" << t.amplitude << ")";
  }
  return os.str();
}

std::vector<DatumSpec> balancing_family(double amplitude) {
  return {DatumSpec::preset("tangential-top", amplitude),
          DatumSpec::preset("tangential-right", amplitude),
          DatumSpec::preset("poiseuille-trace", amplitude)};
}

bool BoundaryDatum::nonzero() const {
  return std::any_of(values.begin(), values.end(), [](Point v) { return v.x != 0.0 || v.y != 0.0; });
}

BoundaryDatum BoundaryDatum::scaled(double s) const {
  BoundaryDatum out = *this;
  out.spec = spec.scaled(s);
  for (Point& v : out.values) v = s * v;
  out.flux_residual *= s;
  out.correction *= s;
  return out;
}

double boundary_flux(const DofMap& dofs, std::span<const int> nodes, std::span<const Point> values) {
  std::vector<int> sorted(nodes.begin(), nodes.end());
  if (!std::is_sorted(sorted.begin(), sorted.end())) throw DatumError("datum nodes must be sorted");
  double flux = 0.0;
  for (const auto& seg : dofs.boundary) {
    if (seg.tag != EdgeTag::Outer) continue;
    const Point ga = values[index_of(sorted, seg.a)];
    const Point gm = values[index_of(sorted, seg.m)];
    const Point gb = values[index_of(sorted, seg.b)];
    flux += seg.length / 6.0 * dot(ga + 4.0 * gm + gb, seg.normal);
  }
  return flux;
}

BoundaryNorms boundary_norms(const DofMap& dofs, const BoundaryDatum& datum) {
  double l2 = 0.0;
  double h1 = 0.0;
  for (const auto& seg : dofs.boundary) {
    if (seg.tag != EdgeTag::Outer) continue;
    const Point ga = datum.values[index_of(datum.nodes, seg.a)];
    const Point gm = datum.values[index_of(datum.nodes, seg.m)];
    const Point gb = datum.values[index_of(datum.nodes, seg.b)];
    for (int q = 0; q < 3; ++q) {
      const double x = kGaussX[q];
      const Point g = (1.0 - x) * (1.0 - 2.0 * x) * ga + 4.0 * x * (1.0 - x) * gm + x * (2.0 * x - 1.0) * gb;
      const Point dg = (1.0 / seg.length) * ((4.0 * x - 3.0) * ga + (4.0 - 8.0 * x) * gm + (4.0 * x - 1.0) * gb);
      l2 += kGaussW[q] * seg.length * dot(g, g);
      h1 += kGaussW[q] * seg.length * dot(dg, dg);
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

BoundaryDatum make_datum(const DatumSpec& spec, const DofMap& dofs, const DomainSpec& domain,
                         double c0) {
  BoundaryDatum d;
  d.spec = spec;
  d.c0 = c0;
  d.nodes = dofs.boundary_nodes(EdgeTag::Outer);
  if (d.nodes.empty()) throw DatumError("mesh has no outer boundary");
  d.values.reserve(d.nodes.size());
  for (int n : d.nodes) d.values.push_back(spec.evaluate(domain, dofs.node_pos[n]));
  d.vanish_patch = spec.vanishing_sides();
  d.flux_residual = boundary_flux(dofs, d.nodes, d.values);
  const BoundaryNorms bn = boundary_norms(dofs, d);
  d.h12_ratio = bn.l2 > 0.0 ? std::sqrt(std::hypot(bn.l2, bn.h1_semi) / bn.l2) : 0.0;
  return d;
}

BoundaryDatum make_datum(const std::string& preset, double amplitude, const DofMap& dofs,
                         const DomainSpec& domain) {
  return make_datum(DatumSpec::preset(preset, amplitude), dofs, domain);
}

BoundaryDatum project_compatible(const BoundaryDatum& datum, const DofMap& dofs) {
  if (!datum.nonzero()) throw DatumError("datum has no support; flux cannot be corrected");

  BoundaryDatum out = datum;
  out.flux_residual = boundary_flux(dofs, out.nodes, out.values);

  double gmax = 0.0;
  for (const Point& v : out.values) gmax = std::max(gmax, norm(v));
  double perimeter = 0.0;
  for (const auto& seg : dofs.boundary) {
    if (seg.tag == EdgeTag::Outer) perimeter += seg.length;
  }
  if (std::abs(out.flux_residual) <= 1e-14 * gmax * perimeter) {
    out.correction = 0.0;
    return out;
  }

  // Fixed bump 4t(1-t) along each side (t = arc parameter of the side),
  // restricted to the datum's support and pushed along the outward normal.
  double lo_x = HUGE_VAL, hi_x = -HUGE_VAL, lo_y = HUGE_VAL, hi_y = -HUGE_VAL;
  std::vector<Point> node_normal(out.nodes.size(), Point{});
  for (const auto& seg : dofs.boundary) {
    if (seg.tag != EdgeTag::Outer) continue;
    for (int n : {seg.a, seg.m, seg.b}) {
      node_normal[index_of(out.nodes, n)] = seg.normal;
      const Point p = dofs.node_pos[n];
      lo_x = std::min(lo_x, p.x), hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y), hi_y = std::max(hi_y, p.y);
    }
  }
  std::vector<Point> profile(out.nodes.size(), Point{});
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    if (dofs.node_corner[out.nodes[i]] || out.values[i] == Point{}) continue;
    const Point p = dofs.node_pos[out.nodes[i]];
    const Point n = node_normal[i];
    const double t = std::abs(n.x) > std::abs(n.y) ? (p.y - lo_y) / (hi_y - lo_y) : (p.x - lo_x) / (hi_x - lo_x);
    profile[i] = 4.0 * t * (1.0 - t) * n;
  }
  const double unit_flux = boundary_flux(dofs, out.nodes, profile);
  if (!(std::abs(unit_flux) > 0.0)) throw DatumError("datum support cannot carry a flux correction");

  const double c = out.flux_residual / unit_flux;
  for (std::size_t i = 0; i < out.nodes.size(); ++i) out.values[i] = out.values[i] - c * profile[i];
  out.correction = c;
  out.flux_residual = boundary_flux(dofs, out.nodes, out.values);
  return out;
}

}  // namespace cavlab
