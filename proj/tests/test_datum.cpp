#include <gtest/gtest.h>

#include <cmath>

#include "cavlab/balance.hpp"
#include "cavlab/error.hpp"
#include "oracles.hpp"

using namespace cavlab;

namespace {

const DomainSpec unit{};

std::shared_ptr<FESystem> square_system(double h) {
  TriangulateOptions o;
  o.h_target = h;
  return assemble(triangulate(unit, std::nullopt, o));
}

std::shared_ptr<FESystem> cavity_system(const CavityShape& c, double h) {
  TriangulateOptions o;
  o.h_target = h;
  return assemble(triangulate(unit, polygonalize(c, default_segment_count(c, h)), o));
}

double flux(const FESystem& s, const BoundaryDatum& g) { return boundary_flux(s.dofs, g.nodes, g.values); }

}  // namespace

TEST(MakeDatum, PoiseuilleTraceHasZeroFlux) {
  auto s = square_system(1.0 / 8);
  const BoundaryDatum g = make_datum(DatumSpec::preset("poiseuille-trace"), s->dofs, unit);
  EXPECT_LE(std::abs(flux(*s, g)), 1e-15);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Point e = oracle::poiseuille_u(s->dofs.node_pos[g.nodes[i]]);
    EXPECT_DOUBLE_EQ(g.values[i].x, e.x);
    EXPECT_DOUBLE_EQ(g.values[i].y, e.y);
  }
  EXPECT_TRUE(g.h4_ok());
  EXPECT_EQ(make_datum(DatumSpec::preset("inflow-outflow"), s->dofs, unit).values, g.values);
}

TEST(MakeDatum, TangentialTop) {
  auto s = square_system(1.0 / 8);
  const double a = 2.5;
  const BoundaryDatum g = make_datum(DatumSpec::preset("tangential-top", a), s->dofs, unit);
  EXPECT_EQ(flux(*s, g), 0.0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Point p = s->dofs.node_pos[g.nodes[i]];
    const double expect = p.y == 1.0 ? a * p.x * (1.0 - p.x) : 0.0;
    EXPECT_DOUBLE_EQ(g.values[i].x, expect);
    EXPECT_EQ(g.values[i].y, 0.0);
  }
  EXPECT_EQ(g.vanish_patch.size(), 3u);
  EXPECT_TRUE(g.h4_ok());
}

TEST(MakeDatum, ConstantFailsVanishingRule) {
  auto s = square_system(0.25);
  const BoundaryDatum g = make_datum(DatumSpec::preset("constant"), s->dofs, unit);
  EXPECT_FALSE(g.vanishes_on_patch());
  EXPECT_FALSE(g.h4_ok());
  EXPECT_TRUE(g.nonzero());
}

TEST(MakeDatum, UnknownPresetRejected) {
  auto s = square_system(0.25);
  EXPECT_THROW(make_datum(DatumSpec::preset("vortex"), s->dofs, unit), DatumError);
  EXPECT_THROW(DatumSpec::preset("vortex"), DatumError);
}

TEST(MakeDatum, RatioGuard) {
  auto s = square_system(1.0 / 16);
  const BoundaryDatum g = make_datum(DatumSpec::preset("tangential-top"), s->dofs, unit);
  const BoundaryNorms n = boundary_norms(s->dofs, g);
  // ||a x(1-x)||_{L2(0,1)}^2 = 1/30, ||(1-2x)||^2 = 1/3, both exact for the P2 interpolant.
  EXPECT_NEAR(n.l2, std::sqrt(1.0 / 30), 1e-14);
  EXPECT_NEAR(n.h1_semi, std::sqrt(1.0 / 3), 1e-14);
  EXPECT_NEAR(g.h12_ratio, std::sqrt(std::hypot(n.l2, n.h1_semi) / n.l2), 1e-14);
  EXPECT_TRUE(g.h12_ok());
  const BoundaryDatum tight = make_datum(DatumSpec::preset("tangential-top"), s->dofs, unit, 1.0);
  EXPECT_FALSE(tight.h12_ok());
  EXPECT_FALSE(tight.h4_ok());
}

TEST(MakeDatum, CombinationIsLinear) {
  auto s = square_system(1.0 / 8);
  const std::vector<DatumSpec> parts{DatumSpec::preset("tangential-top"), DatumSpec::preset("tangential-right")};
  const std::vector<double> w{2.0, -0.5};
  const BoundaryDatum g = make_datum(DatumSpec::combination(parts, w), s->dofs, unit);
  const BoundaryDatum a = make_datum(parts[0], s->dofs, unit);
  const BoundaryDatum b = make_datum(parts[1], s->dofs, unit);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    EXPECT_NEAR(g.values[i].x, 2.0 * a.values[i].x - 0.5 * b.values[i].x, 1e-15);
    EXPECT_NEAR(g.values[i].y, 2.0 * a.values[i].y - 0.5 * b.values[i].y, 1e-15);
  }
  // Vanishing sides of a combination are the common ones.
  EXPECT_EQ(g.vanish_patch, (std::vector<Side>{Side::Bottom, Side::Left}));
}

TEST(ProjectCompatible, CompatibleDatumUnchanged) {
  auto s = square_system(1.0 / 8);
  const BoundaryDatum g = make_datum(DatumSpec::preset("tangential-top"), s->dofs, unit);
  const BoundaryDatum p = project_compatible(g, s->dofs);
  EXPECT_EQ(p.correction, 0.0);
  EXPECT_EQ(p.values, g.values);
}

TEST(ProjectCompatible, RemovesFluxLinearlyOnSupport) {
  auto s = square_system(1.0 / 16);
  const BoundaryDatum base = make_datum(DatumSpec::preset("poiseuille-trace"), s->dofs, unit);
  double c_prev = 0.0;
  for (double eps : {1e-3, 2e-3}) {
    BoundaryDatum g = base;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (s->dofs.node_pos[g.nodes[i]].x == 1.0) g.values[i].x *= 1.0 + eps;
    }
    EXPECT_NEAR(flux(*s, g), eps / 6.0, 1e-15);
    const BoundaryDatum p = project_compatible(g, s->dofs);
    EXPECT_LE(std::abs(flux(*s, p)), 1e-12);
    EXPECT_LE(std::abs(p.flux_residual), 1e-12);
    if (c_prev != 0.0) EXPECT_NEAR(p.correction / c_prev, 2.0, 1e-9);
    c_prev = p.correction;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (g.values[i] == Point{0.0, 0.0}) EXPECT_EQ(p.values[i], (Point{0.0, 0.0}));
    }
    // Idempotent.
    const BoundaryDatum q = project_compatible(p, s->dofs);
    EXPECT_LE(std::abs(flux(*s, q)), 1e-12);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) EXPECT_LE(norm(q.values[i] - p.values[i]), 1e-15);
  }
}

TEST(ProjectCompatible, ZeroDatumRejected) {
  auto s = square_system(0.25);
  const BoundaryDatum g = make_datum(DatumSpec::preset("tangential-top", 0.0), s->dofs, unit);
  EXPECT_FALSE(g.nonzero());
  EXPECT_THROW(project_compatible(g, s->dofs), DatumError);
}

TEST(ForceNullVector, VanishingForceSelectsIt) {
  bool degenerate = true;
  const auto l = force_null_vector({Point{1.0, 2.0}, Point{0.0, 0.0}, Point{-3.0, 0.5}}, &degenerate);
  EXPECT_EQ(l, (std::array<double, 3>{0.0, 1.0, 0.0}));
  EXPECT_FALSE(degenerate);
}

TEST(ForceNullVector, GenericForcesAreAnnihilated) {
  const std::array<Point, 3> v{Point{0.3, -1.2}, Point{2.0, 0.7}, Point{-0.4, 0.9}};
  bool degenerate = true;
  const auto l = force_null_vector(v, &degenerate);
  EXPECT_FALSE(degenerate);
  EXPECT_NEAR(std::hypot(l[0], l[1], l[2]), 1.0, 1e-15);
  const Point r = l[0] * v[0] + l[1] * v[1] + l[2] * v[2];
  EXPECT_LE(norm(r), 1e-12);
  // Scaling one column keeps the direction up to normalisation.
  const auto m = force_null_vector({Point{0.3, -1.2}, 5.0 * v[1], v[2]}, nullptr);
  const double k = std::hypot(l[0], l[1] / 5.0, l[2]);
  EXPECT_NEAR(m[0], l[0] / k, 1e-12);
  EXPECT_NEAR(m[1], l[1] / 5.0 / k, 1e-12);
  EXPECT_NEAR(m[2], l[2] / k, 1e-12);
}

TEST(ForceNullVector, ParallelForcesAreDegenerate) {
  bool degenerate = false;
  const auto l = force_null_vector({Point{1.0, 1.0}, Point{2.0, 2.0}, Point{-0.5, -0.5}}, &degenerate);
  EXPECT_TRUE(degenerate);
  EXPECT_EQ(l, (std::array<double, 3>{0.0, 0.0, 1.0}));
}

TEST(Balance, NetForcesVanish) {
  const CavityShape disk = CavityShape::circle({0.35, 0.6}, 0.12);
  auto s = cavity_system(disk, 1.0 / 16);
  const auto family = balancing_family();
  const BalanceResult b = balance(family, *s, unit);
  EXPECT_FALSE(b.degenerate);
  EXPECT_NEAR(std::hypot(b.lambda[0], b.lambda[1], b.lambda[2]), 1.0, 1e-15);
  const Point comb = b.lambda[0] * b.forces[0] + b.lambda[1] * b.forces[1] + b.lambda[2] * b.forces[2];
  EXPECT_LE(norm(comb), 1e-12);
  const StokesField f = solve_dirichlet(*s, b.datum);
  EXPECT_LE(norm(net_force(*s, f, EdgeTag::Outer)), 1e-8);
  EXPECT_LE(norm(net_force(*s, f, EdgeTag::Cavity)), 1e-8);
}

TEST(Balance, InvariantUnderRescalingAnInput) {
  const CavityShape disk = CavityShape::circle({0.6, 0.45}, 0.1);
  auto s = cavity_system(disk, 1.0 / 12);
  auto family = balancing_family();
  const BalanceResult a = balance(family, *s, unit);
  family[1] = family[1].scaled(4.0);
  const BalanceResult b = balance(family, *s, unit);
  // Same combined datum up to sign and normalisation.
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.datum.values.size(); ++i) {
    num += dot(a.datum.values[i], b.datum.values[i]);
    den += dot(b.datum.values[i], b.datum.values[i]);
  }
  const double scale = num / den;
  for (std::size_t i = 0; i < a.datum.values.size(); ++i) {
    EXPECT_LE(norm(a.datum.values[i] - scale * b.datum.values[i]), 1e-10);
  }
}

TEST(Balance, ExactlyThreeData) {
  auto s = cavity_system(CavityShape::circle({0.5, 0.5}, 0.1), 0.1);
  auto family = balancing_family();
  family.push_back(DatumSpec::preset("bump-top"));
  EXPECT_THROW(balance(family, *s, unit), DatumError);
  family.resize(2);
  EXPECT_THROW(balance(family, *s, unit), DatumError);
}

TEST(Balance, RequiresAdmissibleDataAndCavity) {
  auto s = cavity_system(CavityShape::circle({0.5, 0.5}, 0.1), 0.1);
  std::vector<DatumSpec> bad{DatumSpec::preset("constant"), DatumSpec::preset("tangential-top"),
                             DatumSpec::preset("tangential-right")};
  EXPECT_THROW(balance(bad, *s, unit), DatumError);
  auto free = square_system(0.1);
  EXPECT_THROW(balance(balancing_family(), *free, unit), DatumError);
}
