#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cavlab/error.hpp"
#include "cavlab/estimator.hpp"

using namespace cavlab;

namespace {

const DomainSpec unit{};

MeasureOptions coarse(double h = 1.0 / 16) {
  MeasureOptions o;
  o.h = h;
  return o;
}

ExperimentRecord rec(double area_frac, double W0, double W, double gnorm2 = 4.0) {
  ExperimentRecord r;
  r.area_frac = area_frac;
  r.W0 = W0;
  r.W = W;
  r.ratio = (W - W0) / W0;
  r.gnorm2 = gnorm2;
  r.grad_energy_D = 0.1 * (W - W0);
  return r;
}

}  // namespace

TEST(Bounds, Arithmetic) {
  EXPECT_NEAR(ratio(1.2, 1.0), 0.2, 1e-15);
  EXPECT_EQ(ratio(0.7, 0.7), 0.0);
  EXPECT_THROW(ratio(1.0, 0.0), DatumError);
  EXPECT_NEAR(upper_bound(0.05, 2.0), 0.1, 1e-16);
  EXPECT_EQ(upper_bound(0.0, 2.0), 0.0);
  EXPECT_THROW(upper_bound(0.1, 0.0), DatumError);
  EXPECT_NEAR(lower_bound(1.2, 1.0, 0.1, 4.0), 0.001, 1e-16);
  EXPECT_EQ(lower_bound(1.0, 1.0, 0.1, 4.0), 0.0);
  EXPECT_THROW(lower_bound(1.2, 1.0, 0.1, 0.0), DatumError);
  EXPECT_THROW(lower_bound(1.2, 1.0, -1.0, 1.0), DatumError);
}

TEST(Bounds, Homogeneous) {
  const double W = 1.37;
  const double W0 = 1.21;
  const double g2 = 3.3;
  for (double s : {0.5, 3.0}) {
    EXPECT_NEAR(ratio(s * s * W, s * s * W0), ratio(W, W0), 1e-15);
    EXPECT_NEAR(lower_bound(s * s * W, s * s * W0, 0.7, s * s * g2), lower_bound(W, W0, 0.7, g2), 1e-15);
  }
}

TEST(Calibrate, SingleRecord) {
  const std::vector<ExperimentRecord> r{rec(0.031, 1.0, 1.05)};
  const Calibration c = calibrate(r);
  EXPECT_NEAR(c.K_hat, 0.62, 1e-12);
  EXPECT_EQ(c.used, 1u);
}

TEST(Calibrate, TwoRecordsTakeExtremes) {
  const std::vector<ExperimentRecord> r{rec(0.031, 1.0, 1.05, 4.0), rec(0.071, 2.0, 2.4, 9.0)};
  const Calibration c = calibrate(r);
  EXPECT_NEAR(c.K_hat, std::max(0.031 / 0.05, 0.071 / 0.2), 1e-12);
  EXPECT_NEAR(c.K_low, std::min(0.031 / 0.05, 0.071 / 0.2), 1e-12);
  const double c1 = 0.031 * 4.0 * 1.0 / (0.05 * 0.05);
  const double c2 = 0.071 * 9.0 * 2.0 / (0.4 * 0.4);
  EXPECT_NEAR(c.C_hat, std::min(c1, c2), 1e-9);
}

TEST(Calibrate, NonPositiveRatiosExcluded) {
  std::vector<ExperimentRecord> r{rec(0.031, 1.0, 1.05), rec(0.002, 1.0, 0.999), rec(0.002, 1.0, 1.0)};
  const Calibration c = calibrate(r);
  EXPECT_EQ(c.used, 1u);
  EXPECT_EQ(c.excluded, 2u);
  r.erase(r.begin());
  EXPECT_THROW(calibrate(r), DatumError);
  EXPECT_THROW(calibrate(std::vector<ExperimentRecord>{}), DatumError);
}

TEST(Calibrate, SandwichHoldsExactly) {
  std::vector<ExperimentRecord> r;
  for (int i = 1; i <= 40; ++i) {
    const double f = 0.001 * i * (1.0 + 0.3 * std::sin(i));
    r.push_back(rec(f, 0.2 + 0.01 * i, (0.2 + 0.01 * i) * (1.0 + 3.1 * f + 0.5 * std::cos(i) * f), 40.0 + i));
  }
  const Calibration c = calibrate(r);
  apply_calibration(r, c);
  for (const auto& x : r) {
    EXPECT_LE(x.lower, x.area_frac);
    EXPECT_GE(x.upper, x.area_frac);
  }
}

TEST(Calibrate, ByD0Strata) {
  std::vector<ExperimentRecord> r{rec(0.031, 1.0, 1.05), rec(0.071, 1.0, 1.2), rec(0.002, 1.0, 1.01)};
  r[0].d0 = 0.15;
  r[1].d0 = 0.05;
  r[2].d0 = 0.15;
  const std::vector<double> d0s{0.25, 0.15, 0.05};
  const auto by = calibrate_by_d0(r, d0s);
  ASSERT_EQ(by.size(), 3u);
  EXPECT_EQ(by.at(0.25).used, 0u);
  EXPECT_EQ(by.at(0.25).C_hat, std::numeric_limits<double>::infinity());
  EXPECT_EQ(by.at(0.15).used, 2u);
  EXPECT_EQ(by.at(0.05).used, 1u);
}

TEST(Measure, NoCavityGivesEqualEnergies) {
  const Measurement m = measure(unit, std::nullopt, DatumSpec::preset("tangential-top"), coarse());
  EXPECT_EQ(m.W, m.W0);
  EXPECT_EQ(m.ratio, 0.0);
  EXPECT_EQ(m.identity_residual, 0.0);
  EXPECT_GT(m.W0, 0.0);
  EXPECT_NEAR(m.boundary_W0, m.W0, 1e-10 * (1 + m.W0));
}

TEST(Measure, CavityRaisesEnergyAndSatisfiesDuality) {
  for (const auto& c : {CavityShape::circle({0.5, 0.5}, 0.1), CavityShape::circle({0.25, 0.75}, 0.05),
                        CavityShape::ellipse({0.6, 0.4}, 0.2, 0.08, 0.4)}) {
    const Measurement m = measure(unit, c, DatumSpec::preset("tangential-top"), coarse());
    EXPECT_GT(m.W, m.W0);
    EXPECT_GT(m.ratio, 0.0);
    EXPECT_NEAR(m.area, cavity_area(c), 1e-16);
    EXPECT_NEAR(m.boundary_W, m.W, 1e-10 * (1 + m.W));
    EXPECT_NEAR(m.boundary_W0, m.W0, 1e-10 * (1 + m.W0));
    EXPECT_GT(m.grad_energy_D, 0.0);
    EXPECT_GT(m.gnorm2, 0.0);
    EXPECT_TRUE(std::isfinite(m.grad_energy_D / (m.W - m.W0)));
    EXPECT_LT(m.identity_residual, 1e-2 * (m.W - m.W0));
  }
}

TEST(Measure, ScaleInvariance) {
  const CavityShape c = CavityShape::circle({0.4, 0.6}, 0.12);
  const MeasureOptions o = coarse();
  const MeshPair pair = make_mesh_pair(unit, c, o);
  const DatumSpec g = DatumSpec::preset("tangential-top");
  const Measurement m = measure(unit, c, g, pair, o);
  for (double s : {0.5, 3.0}) {
    const Measurement ms = measure(unit, c, g.scaled(s), pair, o);
    EXPECT_NEAR(ms.ratio, m.ratio, 1e-10 * m.ratio);
    EXPECT_NEAR(upper_bound(ms, 1.3), upper_bound(m, 1.3), 1e-10 * upper_bound(m, 1.3));
    EXPECT_NEAR(lower_bound(ms, 0.7, ms.gnorm2), lower_bound(m, 0.7, m.gnorm2), 1e-10 * lower_bound(m, 0.7, m.gnorm2));
  }
}

TEST(Measure, IdentityResidualDecreasesUnderRefinement) {
  const CavityShape c = CavityShape::circle({0.5, 0.5}, 0.1);
  MeasureOptions o = coarse(1.0 / 8);
  o.with_gnorm = false;
  o.with_grad_energy = false;
  const double r0 = identity_check(unit, c, DatumSpec::preset("tangential-top"), o);
  o.refine = 1;
  const double r1 = identity_check(unit, c, DatumSpec::preset("tangential-top"), o);
  EXPECT_GT(r0 / r1, 1.5);
}

TEST(Measure, BalancedDatumHasNoNetForce) {
  MeasureOptions o = coarse();
  o.balance = true;
  const Measurement m = measure(unit, CavityShape::circle({0.3, 0.55}, 0.1), DatumSpec::preset("tangential-top"), o);
  EXPECT_TRUE(m.balanced);
  EXPECT_LE(norm(m.net_force_outer), 1e-8);
  EXPECT_LE(norm(m.net_force_cavity), 1e-8);
  EXPECT_NEAR(std::hypot(m.lambda[0], m.lambda[1], m.lambda[2]), 1.0, 1e-14);
}

TEST(Measure, ZeroDatumRejected) {
  EXPECT_THROW(measure(unit, CavityShape::circle({0.5, 0.5}, 0.1), DatumSpec::preset("tangential-top", 0.0), coarse()),
               DatumError);
}

TEST(Measure, InfeasibleCavityRejected) {
  EXPECT_THROW(measure(unit, CavityShape::circle({0.5, 0.5}, 0.55), DatumSpec::preset("tangential-top"), coarse()),
               GeometryError);
}

TEST(Estimate, ContainsTruthWithCalibratedConstants) {
  const CavityShape c = CavityShape::circle({0.5, 0.5}, 0.1);
  const Measurement m = measure(unit, c, DatumSpec::preset("tangential-top"), coarse());
  const double K = m.area / m.ratio * (1 + 1e-12);
  const double C = m.area * m.gnorm2 * m.W0 / ((m.W - m.W0) * (m.W - m.W0)) * (1 - 1e-12);
  const SizeEstimate e = estimate(m, K, C);
  EXPECT_TRUE(e.contains_truth());
  EXPECT_GE(e.lower, 0.0);
  EXPECT_FALSE(estimate(m, 0.5 * K, C).contains_truth());
}
