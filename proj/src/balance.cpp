#include "cavlab/balance.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "cavlab/error.hpp"

namespace cavlab {

std::array<double, 3> force_null_vector(const std::array<Point, 3>& v, bool* degenerate) {
  if (degenerate) *degenerate = false;
  double vmax = 0.0;
  for (const Point& f : v) vmax = std::max(vmax, norm(f));
  auto unit = [](int i) {
    std::array<double, 3> e{0.0, 0.0, 0.0};
    e[i] = 1.0;
    return e;
  };
  auto smallest = [&] {
    int k = 0;
    for (int i = 1; i < 3; ++i) {
      if (norm(v[i]) < norm(v[k])) k = i;
    }
    return k;
  };
  if (vmax == 0.0) return unit(0);
  const int k = smallest();
  if (norm(v[k]) <= 1e-14 * vmax) return unit(k);

  const std::array<double, 3> rx{v[0].x, v[1].x, v[2].x};
  const std::array<double, 3> ry{v[0].y, v[1].y, v[2].y};
  std::array<double, 3> lam{rx[1] * ry[2] - rx[2] * ry[1], rx[2] * ry[0] - rx[0] * ry[2],
                            rx[0] * ry[1] - rx[1] * ry[0]};
  const double nx = std::sqrt(rx[0] * rx[0] + rx[1] * rx[1] + rx[2] * rx[2]);
  const double ny = std::sqrt(ry[0] * ry[0] + ry[1] * ry[1] + ry[2] * ry[2]);
  const double nl = std::sqrt(lam[0] * lam[0] + lam[1] * lam[1] + lam[2] * lam[2]);
  if (!(nl > 1e-10 * nx * ny)) {
    if (degenerate) *degenerate = true;
    return unit(k);
  }
  int big = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(lam[i]) > std::abs(lam[big])) big = i;
  }
  const double s = (lam[big] < 0.0 ? -1.0 : 1.0) / nl;
  for (double& l : lam) l *= s;
  return lam;
}

BalanceResult balance(std::span<const DatumSpec> data, const FESystem& cavity_system, const DomainSpec& domain,
                      SolverKind kind) {
  if (data.size() != 3) throw DatumError("balancing needs exactly three data");
  if (!cavity_system.has_cavity_boundary) throw DatumError("balancing needs a mesh with a cavity boundary");
  const DofMap& dofs = cavity_system.dofs;
  std::array<BoundaryDatum, 3> g;
  for (int i = 0; i < 3; ++i) {
    g[i] = project_compatible(make_datum(data[i], dofs, domain), dofs);
    if (!g[i].h4_ok()) throw DatumError("datum " + data[i].id() + " is not admissible for balancing");
  }

  SolveOptions opts;
  opts.kind = kind;
  std::array<std::future<Point>, 3> jobs;
  for (int i = 0; i < 3; ++i) {
    jobs[i] = std::async(std::launch::async, [&, i] {
      const StokesField f = solve_dirichlet(cavity_system, g[i], true, opts);
      return net_force(cavity_system, f, EdgeTag::Outer);
    });
  }
  BalanceResult out;
  for (int i = 0; i < 3; ++i) out.forces[i] = jobs[i].get();

  out.lambda = force_null_vector(out.forces, &out.degenerate);
  if (out.degenerate) {
    out.warning = "force vectors are numerically parallel; falling back to a single datum";
  }
  std::vector<DatumSpec> parts(data.begin(), data.end());
  out.spec = DatumSpec::combination(parts, out.lambda);
  out.datum = project_compatible(make_datum(out.spec, dofs, domain), dofs);
  return out;
}

BalanceResult balance(std::span<const DatumSpec> data, const DomainSpec& domain, const CavityShape& cavity,
                      double h, double min_angle) {
  TriangulateOptions opts;
  opts.h_target = h;
  opts.min_angle = min_angle;
  const auto poly = polygonalize(cavity, default_segment_count(cavity, h));
  auto system = assemble(std::make_shared<const Mesh>(triangulate(domain, poly, opts)));
  return balance(data, *system, domain);
}

}  // namespace cavlab
