// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavlab/lab.hpp"
#include "oracles.hpp"

using namespace cavlab;
using Clock = std::chrono::steady_clock;

namespace {

const DomainSpec unit{};
constexpr double kFine = 1.0 / 64;
constexpr double kCoarse = 1.0 / 32;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Ledger {
  int failed = 0;
  void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] AC%-2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Worst relative duality gap seen across every solve of this run.
double duality_gap = 0.0;
int duality_solves = 0;

void track(double pairing, double energy) {
  duality_gap = std::max(duality_gap, std::abs(pairing - energy) / (1.0 + energy));
  ++duality_solves;
}

void track(const Measurement& m) {
  track(m.boundary_W0, m.W0);
  if (m.area > 0.0) track(m.boundary_W, m.W);
}

MeasureOptions at(double h) {
  MeasureOptions o;
  o.h = h;
  return o;
}

}  // namespace

int main() {
  Ledger ledger;
  const auto t_all = Clock::now();

  // 1. Manufactured Poiseuille solution.
  {
    const auto t0 = Clock::now();
    TriangulateOptions o;
    o.h_target = kCoarse;
    auto s = assemble(triangulate(unit, std::nullopt, o));
    const BoundaryDatum g = project_compatible(make_datum(DatumSpec::preset("poiseuille-trace"), s->dofs, unit),
                                               s->dofs);
    const StokesField f = solve_dirichlet(*s, g);
    const double W0 = strain_energy(*s, f);
    track(pairing(boundary_residual(*s, f, EdgeTag::Outer), g.values), W0);
    const double dt = seconds_since(t0);
    const double err = std::abs(W0 - oracle::poiseuille_energy);
    ledger.report(1, "manufactured solution", err <= 1e-8 && dt < 5.0,
                  fmt("|W0 - 1/3| = %.2e (tol 1e-8), %.2f s (limit 5 s)", err, dt));
  }

  // 4. Identity check under refinement; its solves also feed 2.
  {
    const auto t0 = Clock::now();
    const CavityShape disk = CavityShape::circle({0.5, 0.5}, 0.1);
    const Measurement a = measure(unit, disk, DatumSpec::preset("tangential-top"), at(kCoarse));
    const Measurement b = measure(unit, disk, DatumSpec::preset("tangential-top"), at(kFine));
    track(a);
    track(b);
    const double dt = seconds_since(t0);
    const double factor = a.identity_residual / b.identity_residual;
    ledger.report(4, "identity under refinement", factor >= 1.5 && dt < 60.0,
                  fmt("residual %.3e -> %.3e, factor %.2f (min 1.5), %.1f s (limit 60 s)", a.identity_residual,
                      b.identity_residual, factor, dt));
  }

  // 3. Rigid motions on generated, cavity and refined meshes.
  {
    std::vector<std::shared_ptr<const Mesh>> meshes;
    for (const auto& c : {std::optional<CavityShape>{}, std::optional(CavityShape::circle({0.25, 0.75}, 0.15)),
                          std::optional(CavityShape::ellipse({0.5, 0.5}, 0.3, 0.1, 0.6))}) {
      const MeshPair p = make_mesh_pair(unit, c, at(1.0 / 24));
      meshes.push_back(p.full);
      if (p.cavity) meshes.push_back(p.cavity);
      meshes.push_back(std::make_shared<const Mesh>(refine(*p.full)));
    }
    double worst = 0.0;
    for (const auto& m : meshes) {
      auto s = assemble(m);
      const Point c{0.37, 0.81};
      const std::function<Point(Point)> motions[] = {
          [](Point) { return Point{1.0, 0.0}; },
          [](Point) { return Point{0.0, 1.0}; },
          [](Point p) { return Point{-p.y, p.x}; },
          [c](Point p) { return Point{-2.0 * (p.y - c.y) + 0.3, 2.0 * (p.x - c.x) - 1.1}; },
      };
      for (const auto& f : motions) worst = std::max(worst, std::abs(strain_energy(*s, interpolate(s->dofs, f))));
    }
    ledger.report(3, "rigid motions", worst <= 1e-12,
                  fmt("max energy %.2e over %zu meshes x 4 motions (tol 1e-12)", worst, meshes.size()));
  }

  // 6. Scale invariance on a fixed mesh pair.
  {
    const CavityShape disk = CavityShape::circle({0.35, 0.6}, 0.12);
    const MeasureOptions o = at(kCoarse);
    const MeshPair pair = make_mesh_pair(unit, disk, o);
    const DatumSpec g = DatumSpec::preset("tangential-top");
    const Measurement m = measure(unit, disk, g, pair, o);
    track(m);
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    for (double s : {0.5, 3.0}) {
      const Measurement ms = measure(unit, disk, g.scaled(s), pair, o);
      track(ms);
      worst = std::max({worst, rel(ms.ratio, m.ratio), rel(upper_bound(ms, 1.0), upper_bound(m, 1.0)),
                        rel(lower_bound(ms, 1.0, ms.gnorm2), lower_bound(m, 1.0, m.gnorm2))});
    }
    ledger.report(6, "scale invariance", worst <= 1e-10,
                  fmt("max relative change %.2e for s in {0.5, 3} (tol 1e-10)", worst));
  }

  // 10. Balanced datum from the three-preset family.
  {
    MeasureOptions o = at(kFine);
    o.balance = true;
    double worst_outer = 0.0;
    double worst_cavity = 0.0;
    std::string lambdas;
    for (const auto& disk : {CavityShape::circle({0.5, 0.5}, 0.1), CavityShape::circle({0.3, 0.6}, 0.12)}) {
      const Measurement m = measure(unit, disk, DatumSpec::preset("tangential-top"), o);
      track(m);
      worst_outer = std::max(worst_outer, norm(m.net_force_outer));
      worst_cavity = std::max(worst_cavity, norm(m.net_force_cavity));
      lambdas += fmt(" (%.3f, %.3f, %.3f)", m.lambda[0], m.lambda[1], m.lambda[2]);
    }
    ledger.report(10, "balanced net forces", worst_outer <= 1e-8 && worst_cavity <= 1e-8,
                  fmt("|F_outer| %.2e, |F_cavity| %.2e (tol 1e-8), lambda%s", worst_outer, worst_cavity,
                      lambdas.c_str()));
  }

  // 11. Mesh contract on every grid geometry and the cavity-free mesh.
  const ExperimentConfig config = ExperimentConfig::defaults();
  {
    const auto t0 = Clock::now();
    int meshes = 0;
    int bad = 0;
    double min_angle = 180.0;
    double closure = 0.0;
    std::string first_problem;
    auto check = [&](const Mesh& m, double expect_area) {
      ++meshes;
      const MeshCheck c = check_mesh(m);
      const double a = oracle::min_max_angle(m).first;
      min_angle = std::min(min_angle, a);
      closure = std::max(closure, std::abs(m.total_area() - expect_area) / expect_area);
      if (!c.ok() || a < 25.0) {
        ++bad;
        if (first_problem.empty()) first_problem = c.message;
      }
    };
    check(*make_mesh_pair(unit, std::nullopt, at(kFine)).full, unit.area());
    for (const Point& p : config.positions) {
      for (double f : config.fractions) {
        const CavityShape disk = CavityShape::circle(p, radius_for_fraction(unit, f));
        const MeshPair pair = make_mesh_pair(unit, disk, at(kFine));
        const double hole = oracle::shoelace(polygonalize(disk, default_segment_count(disk, kFine)));
        check(*pair.full, unit.area());
        check(*pair.cavity, unit.area() - hole);
      }
    }
    ledger.report(11, "mesh contract", bad == 0 && closure <= 1e-12,
                  fmt("%d meshes, %d failing, min angle %.2f deg (min 25), area closure %.1e (tol 1e-12), %.1f s%s",
                      meshes, bad, min_angle, closure, seconds_since(t0),
                      first_problem.empty() ? "" : (" " + first_problem).c_str()));
  }

  // 5, 7, 9 share one run of the default grid at h = 1/64.
  const auto t_grid = Clock::now();
  GridResult grid = run_grid(config, 0);
  const double grid_seconds = seconds_since(t_grid);
  duality_gap = std::max(duality_gap, grid.max_duality_gap);
  duality_solves += 2 * 24;

  {
    int below_tol = 0;
    int not_strict = 0;
    for (const auto& r : grid.records) {
      if (r.W < r.W0 - 0.01 * r.W0) ++below_tol;
      if (r.area_frac >= 0.002 && !(r.W > r.W0)) ++not_strict;
    }
    double min_gap = 1e300;
    for (const auto& r : grid.records) min_gap = std::min(min_gap, (r.W - r.W0) / r.W0);
    ledger.report(5, "energy monotonicity", below_tol == 0 && not_strict == 0,
                  fmt("%zu records, %d below W0 - 1%%, %d not strictly above W0, min (W-W0)/W0 %.3e",
                      grid.records.size(), below_tol, not_strict, min_gap));
  }

  {
    const double d0 = config.d0_distances()[1];  // 3 * d0_unit
    std::vector<ExperimentRecord> stratum;
    for (const auto& r : grid.records) {
      if (r.d0 == d0) stratum.push_back(r);
    }
    bool ok = !stratum.empty();
    std::size_t inside = 0;
    Calibration c{};
    try {
      c = calibrate(stratum, unit.area());
      apply_calibration(stratum, c);
      for (const auto& r : stratum) {
        if (r.lower <= r.area_frac * unit.area() && r.area_frac * unit.area() <= r.upper) ++inside;
      }
    } catch (const std::exception& e) {
      ok = false;
    }
    ok = ok && std::isfinite(c.K_hat) && c.K_hat > 0 && std::isfinite(c.C_hat) && c.C_hat > 0 &&
         inside == stratum.size() && grid_seconds < 900.0;
    ledger.report(7, "sector reproduction", ok,
                  fmt("d0 = %.2f: %zu records, K_hat %.4g, C_hat %.4g, sandwich %zu/%zu, grid %.0f s (limit 900 s)",
                      d0, stratum.size(), c.K_hat, c.C_hat, inside, stratum.size(), grid_seconds));
  }

  {
    const auto d0s = config.d0_distances();
    const Calibration overall = calibrate(grid.records, unit.area());
    const auto by = calibrate_by_d0(grid.records, d0s, unit.area());
    const auto report = nlohmann::json::parse(calibration_json(overall, by));
    std::string trail;
    bool ok = report["C_hat_nonincreasing_as_d0_decreases"].get<bool>();
    double prev = HUGE_VAL;
    for (double d : d0s) {  // decreasing d0
      const Calibration& c = by.at(d);
      const double v = c.used > 0 ? c.C_hat : HUGE_VAL;
      ok = ok && v <= prev;
      prev = v;
      trail += c.used > 0 ? fmt(" %.2f:%.4g(n=%zu)", d, c.C_hat, c.used) : fmt(" %.2f:empty", d);
    }
    ledger.report(9, "d0 degradation", ok, fmt("C_hat by d0%s", trail.c_str()));
  }

  // 8. Concentric size sweep.
  {
    const auto t0 = Clock::now();
    const auto sweep = run_sweep(config, 0);
    bool increasing = sweep.size() == 9;
    for (std::size_t i = 1; i < sweep.size(); ++i) increasing = increasing && sweep[i].ratio > sweep[i - 1].ratio;
    const double growth = sweep.back().ratio / sweep.front().ratio;
    ledger.report(8, "size sweep", increasing && growth > 50.0,
                  fmt("%zu radii, strictly increasing %s, ratio(0.45)/ratio(0.05) = %.1f (min 50), %.0f s",
                      sweep.size(), increasing ? "yes" : "no", growth, seconds_since(t0)));
  }

  ledger.report(2, "discrete duality", duality_gap <= 1e-10,
                fmt("max |pairing - W| / (1 + W) = %.2e over %d solves (tol 1e-10)", duality_gap, duality_solves));

  std::printf("%d failed, total %.0f s\n", ledger.failed, seconds_since(t_all));
  return ledger.failed == 0 ? 0 : 1;
}
