#pragma once

#include <span>
#include <string>
#include <vector>

#include "cavlab/dofmap.hpp"
#include "cavlab/geometry.hpp"

namespace cavlab {

enum class Side { Bottom, Right, Top, Left };

std::string to_string(Side side);

/// One analytic ingredient of a Dirichlet datum. Presets are evaluated in
/// normalised coordinates (s, t) = (p - corner) / side:
///   tangential-top     (a s(1-s), 0) on the top side, 0 elsewhere
///   tangential-bottom  (a s(1-s), 0) on the bottom side
///   tangential-left    (0, a t(1-t)) on the left side
///   tangential-right   (0, a t(1-t)) on the right side
///   poiseuille-trace   trace of (a t(1-t), 0); alias inflow-outflow
///   bump-top           (16 a s^2(1-s)^2, 0) on the top side
///   constant           a * value everywhere
struct DatumTerm {
  std::string preset;
  double amplitude = 1.0;
  Point value{1.0, 0.0};
  double weight = 1.0;
};

/// Analytic datum: a weighted sum of preset terms.
struct DatumSpec {
  std::vector<DatumTerm> terms;

  static DatumSpec preset(const std::string& name, double amplitude = 1.0,
                          Point value = {1.0, 0.0});
  static DatumSpec combination(std::span<const DatumSpec> parts, std::span<const double> weights);
  DatumSpec scaled(double s) const;

  Point evaluate(const DomainSpec& domain, Point p) const;
  /// Sides on which the datum vanishes identically.
  std::vector<Side> vanishing_sides() const;
  std::string id() const;
};

const std::vector<std::string>& known_presets();

/// The three presets used by the zero-net-force construction.
std::vector<DatumSpec> balancing_family(double amplitude = 1.0);

/// Dirichlet datum sampled on the outer-boundary velocity nodes of one mesh.
struct BoundaryDatum {
  DatumSpec spec;
  std::vector<int> nodes;     // sorted outer boundary nodes
  std::vector<Point> values;  // g at `nodes`
  double flux_residual = 0.0;
  double correction = 0.0;
  std::vector<Side> vanish_patch;
  /// ||g||_{H^1/2} / ||g||_{L^2} via the interpolation surrogate
  /// sqrt(||g||_{H^1} / ||g||_{L^2}).
  double h12_ratio = 0.0;
  double c0 = 100.0;

  bool nonzero() const;
  bool vanishes_on_patch() const { return !vanish_patch.empty(); }
  bool h12_ok() const { return h12_ratio <= c0; }
  /// Admissible datum: nonzero, vanishing on a side, bounded H^1/2 ratio.
  /// H^{3/2} regularity holds for all presets.
  bool h4_ok() const { return nonzero() && vanishes_on_patch() && h12_ok(); }
  BoundaryDatum scaled(double s) const;
};

/// Discrete flux of the P2 boundary interpolant, sum over outer segments of
/// int g.n (Simpson's rule, exact for quadratics).
double boundary_flux(const DofMap& dofs, std::span<const int> nodes, std::span<const Point> values);

struct BoundaryNorms {
  double l2 = 0.0;       // ||g||_{L^2(dOmega)}
  double h1_semi = 0.0;  // ||dg/ds||_{L^2(dOmega)}
};
BoundaryNorms boundary_norms(const DofMap& dofs, const BoundaryDatum& datum);

BoundaryDatum make_datum(const DatumSpec& spec, const DofMap& dofs, const DomainSpec& domain,
                         double c0 = 100.0);
BoundaryDatum make_datum(const std::string& preset, double amplitude, const DofMap& dofs,
                         const DomainSpec& domain);

/// Removes the discrete normal flux by subtracting c * |g| * n on the datum's
/// own support (corners excluded). Idempotent on compatible data.
BoundaryDatum project_compatible(const BoundaryDatum& datum, const DofMap& dofs);

}  // namespace cavlab
