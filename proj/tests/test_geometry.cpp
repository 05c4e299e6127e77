#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cavlab/error.hpp"
#include "cavlab/geometry.hpp"
#include "oracles.hpp"

using namespace cavlab;

namespace {
const DomainSpec unit{};
}

TEST(CavityArea, DiskClosedForm) {
  EXPECT_NEAR(cavity_area(CavityShape::circle({0.5, 0.5}, 0.1)), std::numbers::pi * 0.01, 1e-16);
  for (double r : {0.01, 0.1, 0.3, 0.45}) {
    const double a = cavity_area(CavityShape::circle({0.5, 0.5}, r));
    EXPECT_LE(std::abs(a - std::numbers::pi * r * r), 1e-14 * a);
  }
}

TEST(CavityArea, SquarePolygonByShoelace) {
  const CavityShape sq = CavityShape::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_DOUBLE_EQ(cavity_area(sq), 1.0);
}

TEST(CavityArea, EllipseClosedForm) {
  EXPECT_NEAR(cavity_area(CavityShape::ellipse({0.5, 0.5}, 0.2, 0.1, 0.3)), std::numbers::pi * 0.02, 1e-15);
}

TEST(CavityArea, FractionRadius) {
  const double r = radius_for_fraction(unit, 0.031);
  EXPECT_NEAR(r, std::sqrt(0.031 / std::numbers::pi), 1e-15);
  EXPECT_NEAR(cavity_area(CavityShape::circle({0.5, 0.5}, r)) / unit.area(), 0.031, 1e-15);
}

TEST(CavityArea, DegenerateRejected) {
  EXPECT_THROW(cavity_area(CavityShape::circle({0.5, 0.5}, 0.0)), GeometryError);
  EXPECT_THROW(cavity_area(CavityShape::polygon({{0, 0}, {1, 0}, {2, 0}})), GeometryError);
}

TEST(BoundaryDistance, Examples) {
  EXPECT_NEAR(boundary_distance(unit, CavityShape::circle({0.5, 0.5}, 0.1)), 0.4, 1e-15);
  EXPECT_NEAR(boundary_distance(unit, CavityShape::circle({0.2, 0.5}, 0.1)), 0.1, 1e-15);
  EXPECT_NEAR(boundary_distance(unit, CavityShape::circle({0.5, 0.5}, 0.45)), 0.05, 1e-15);
}

TEST(BoundaryDistance, TouchingOrCrossingRejected) {
  EXPECT_THROW(boundary_distance(unit, CavityShape::circle({0.5, 0.5}, 0.5)), GeometryError);
  EXPECT_THROW(boundary_distance(unit, CavityShape::circle({0.5, 0.5}, 0.55)), GeometryError);
  EXPECT_THROW(boundary_distance(unit, CavityShape::circle({1.2, 0.5}, 0.1)), GeometryError);
}

TEST(BoundaryDistance, ReconstructsCenterEdgeDistance) {
  for (Point c : {Point{0.3, 0.6}, Point{0.5, 0.5}, Point{0.75, 0.25}, Point{0.2, 0.85}}) {
    for (double r : {0.01, 0.05, 0.1}) {
      const double edge = std::min({c.x, 1.0 - c.x, c.y, 1.0 - c.y});
      EXPECT_NEAR(boundary_distance(unit, CavityShape::circle(c, r)) + r, edge, 1e-15);
    }
  }
}

TEST(BoundaryDistance, ShiftedDomain) {
  DomainSpec d;
  d.side = 2.0;
  d.corner = {-1.0, 3.0};
  EXPECT_NEAR(boundary_distance(d, CavityShape::circle({0.0, 4.0}, 0.5)), 0.5, 1e-15);
}

TEST(Assumptions, CenteredDiskPassesWithQTwo) {
  const AssumptionReport r = validate_assumptions(unit, CavityShape::circle({0.5, 0.5}, 0.1), {10.0, 0.01});
  EXPECT_TRUE(r.all_pass());
  EXPECT_NEAR(r.q, 2.0, 1e-15);
  EXPECT_NEAR(r.d0, 0.4, 1e-15);
  EXPECT_GT(r.area, 0.0);
}

TEST(Assumptions, SmallDiskNearEdgeFailsDistance) {
  const AssumptionReport r = validate_assumptions(unit, CavityShape::circle({0.0015, 0.5}, 0.001), {10.0, 0.01});
  EXPECT_FALSE(r.h2);
  EXPECT_TRUE(r.h3);
  EXPECT_FALSE(r.all_pass());
}

TEST(Assumptions, SelfIntersectingPolygonThrows) {
  const CavityShape bowtie = CavityShape::polygon({{0.2, 0.2}, {0.8, 0.8}, {0.8, 0.2}, {0.2, 0.8}});
  EXPECT_THROW(validate_assumptions(unit, bowtie), GeometryError);
}

TEST(Assumptions, ThinEllipseFailsFatness) {
  const AssumptionReport r = validate_assumptions(unit, CavityShape::ellipse({0.5, 0.5}, 0.3, 0.01), {10.0, 0.01});
  EXPECT_NEAR(r.q, 0.6 / 0.01, 1e-9);
  EXPECT_FALSE(r.h3);
}

TEST(Assumptions, Pure) {
  const CavityShape s = CavityShape::ellipse({0.4, 0.6}, 0.2, 0.1, 0.7);
  EXPECT_EQ(validate_assumptions(unit, s), validate_assumptions(unit, s));
}

TEST(Polygonalize, InscribedSquare) {
  const auto p = polygonalize(CavityShape::circle({0, 0}, 1.0), 4);
  ASSERT_EQ(p.size(), 4u);
  const Point expect[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(p[i].x, expect[i].x, 1e-15);
    EXPECT_NEAR(p[i].y, expect[i].y, 1e-15);
  }
}

TEST(Polygonalize, SagittaBound) {
  const double r = 0.1;
  const Point c{0.5, 0.5};
  const auto p = polygonalize(CavityShape::circle(c, r), 64);
  const double sagitta = r * (1.0 - std::cos(std::numbers::pi / 64));
  EXPECT_NEAR(sagitta, 1.2e-4, 1e-5);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point a = p[i];
    const Point b = p[(i + 1) % p.size()];
    EXPECT_NEAR(distance(a, c), r, 1e-15);
    const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    EXPECT_LE(r - distance(mid, c), sagitta * (1 + 1e-9));
  }
}

TEST(Polygonalize, PolygonUnchanged) {
  const std::vector<Point> v{{0.2, 0.2}, {0.7, 0.3}, {0.5, 0.8}};
  const auto p = polygonalize(CavityShape::polygon(v), 100);
  ASSERT_EQ(p.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(p[i], v[i]);
}

TEST(Polygonalize, TooFewSegmentsRejected) {
  EXPECT_THROW(polygonalize(CavityShape::circle({0.5, 0.5}, 0.1), 2), GeometryError);
}

TEST(Polygonalize, CounterClockwise) {
  EXPECT_GT(oracle::shoelace(polygonalize(CavityShape::ellipse({0.5, 0.5}, 0.2, 0.1, 1.0), 50)), 0.0);
}

TEST(Polygonalize, AreaConvergesQuadratically) {
  const CavityShape c = CavityShape::circle({0.5, 0.5}, 0.2);
  const double exact = cavity_area(c);
  double prev = 0.0;
  for (int n = 16; n <= 512; n *= 2) {
    const double err = std::abs(exact - oracle::shoelace(polygonalize(c, n)));
    if (prev > 0.0) EXPECT_GE(prev / err, 3.5) << "n = " << n;
    prev = err;
  }
}

TEST(Polygonalize, DefaultSegmentCount) {
  const CavityShape c = CavityShape::circle({0.5, 0.5}, 0.1);
  EXPECT_EQ(default_segment_count(c, 0.1), 64);
  EXPECT_EQ(default_segment_count(c, 1.0 / 256), static_cast<int>(std::ceil(2 * std::numbers::pi * 0.1 * 256)));
}
