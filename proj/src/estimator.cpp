#include "cavlab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <future>
#include <limits>
#include <unordered_map>

#include "cavlab/error.hpp"

namespace cavlab {

namespace {

struct PointHash {
  std::size_t operator()(Point p) const {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::memcpy(&a, &p.x, sizeof a);
    std::memcpy(&b, &p.y, sizeof b);
    return std::hash<std::uint64_t>()(a * 0x9E3779B97F4A7C15ULL ^ b);
  }
};

struct Solved {
  std::shared_ptr<FESystem> system;
  BoundaryDatum datum;
  StokesField field;
};

Solved solve_on(std::shared_ptr<const Mesh> mesh, const DatumSpec& spec, const DomainSpec& domain,
                const MeasureOptions& opts) {
  Solved s;
  s.system = assemble(std::move(mesh), opts.mu);
  s.datum = project_compatible(make_datum(spec, s.system->dofs, domain, opts.c0), s.system->dofs);
  SolveOptions so;
  so.kind = opts.solver;
  s.field = solve_dirichlet(*s.system, s.datum, true, so);
  return s;
}

}  // namespace

MeshPair make_mesh_pair(const DomainSpec& domain, const std::optional<CavityShape>& cavity,
                        const MeasureOptions& options) {
  TriangulateOptions t;
  t.h_target = options.h;
  t.min_angle = options.min_angle;
  MeshPair out;
  if (!cavity) {
    Mesh m = triangulate(domain, std::nullopt, t);
    for (int i = 0; i < options.refine; ++i) m = refine(m);
    out.full = std::make_shared<const Mesh>(std::move(m));
    return out;
  }
  cavity->validate();
  boundary_distance(domain, *cavity);
  const auto poly = polygonalize(*cavity, default_segment_count(*cavity, options.h));
  Mesh full = triangulate_filled(domain, poly, t);
  for (int i = 0; i < options.refine; ++i) full = refine(full);
  out.cavity = std::make_shared<const Mesh>(full.submesh(Region::Fluid));
  out.full = std::make_shared<const Mesh>(std::move(full));
  return out;
}

Measurement measure(const DomainSpec& domain, const std::optional<CavityShape>& cavity, const DatumSpec& datum,
                    const MeasureOptions& options) {
  return measure(domain, cavity, datum, make_mesh_pair(domain, cavity, options), options);
}

Measurement measure(const DomainSpec& domain, const std::optional<CavityShape>& cavity, const DatumSpec& datum,
                    const MeshPair& meshes, const MeasureOptions& options) {
  domain.validate();
  Measurement m;
  m.h = std::ldexp(options.h, -options.refine);
  m.h_max = longest_edge(*meshes.full);
  m.triangles_full = meshes.full->n_triangles();

  DatumSpec spec = datum;
  std::shared_ptr<FESystem> cavity_system;
  if (cavity) {
    if (!meshes.cavity) throw GeometryError("measure: cavity mesh missing");
    m.area = cavity_area(*cavity);
    m.d0 = boundary_distance(domain, *cavity);
    m.triangles_cavity = meshes.cavity->n_triangles();
    cavity_system = assemble(meshes.cavity, options.mu);
    if (options.balance) {
      const BalanceResult b = balance(options.family, *cavity_system, domain, options.solver);
      spec = b.spec;
      m.lambda = b.lambda;
      m.balanced = true;
    }
  }
  m.datum_id = spec.id();

  // Cavity-free problem and, concurrently, the cavity problem.
  auto free_job = std::async(std::launch::async, [&] { return solve_on(meshes.full, spec, domain, options); });
  Solved with_cavity;
  if (cavity) {
    with_cavity.system = cavity_system;
    with_cavity.datum =
        project_compatible(make_datum(spec, cavity_system->dofs, domain, options.c0), cavity_system->dofs);
    SolveOptions so;
    so.kind = options.solver;
    with_cavity.field = solve_dirichlet(*cavity_system, with_cavity.datum, true, so);
  }
  const Solved free_problem = free_job.get();
  const FESystem& S0 = *free_problem.system;

  m.W0 = strain_energy(S0, free_problem.field);
  m.boundary_W0 = pairing(boundary_residual(S0, free_problem.field, EdgeTag::Outer), free_problem.datum.values);
  m.h12_ratio = free_problem.datum.h12_ratio;
  m.h4_ok = free_problem.datum.h4_ok();
  if (!(m.W0 > 0.0)) throw DatumError("cavity-free energy vanishes; the datum is zero");
  if (options.with_gnorm) {
    const double g = h32_norm(S0.dofs, free_problem.datum);
    m.gnorm2 = g * g;
  }

  if (!cavity) {
    m.W = m.W0;
    m.boundary_W = m.boundary_W0;
    m.net_force_outer = net_force(S0, free_problem.field, EdgeTag::Outer);
    m.ratio = 0.0;
    return m;
  }

  const FESystem& S = *with_cavity.system;
  m.W = strain_energy(S, with_cavity.field);
  const BoundaryFunctional r_outer = boundary_residual(S, with_cavity.field, EdgeTag::Outer);
  const BoundaryFunctional r_cavity = boundary_residual(S, with_cavity.field, EdgeTag::Cavity);
  m.boundary_W = pairing(r_outer, with_cavity.datum.values);
  m.net_force_outer = net_force(r_outer);
  m.net_force_cavity = net_force(r_cavity);
  m.ratio = ratio(m.W, m.W0);

  // Trace of u0 on the cavity boundary nodes; nodes coincide by construction.
  std::unordered_map<Point, int, PointHash> full_node;
  full_node.reserve(S0.dofs.n_nodes());
  for (int n = 0; n < S0.dofs.n_nodes(); ++n) full_node.emplace(S0.dofs.node_pos[n], n);
  double rhs = 0.0;
  for (std::size_t i = 0; i < r_cavity.nodes.size(); ++i) {
    const auto it = full_node.find(S.dofs.node_pos[r_cavity.nodes[i]]);
    if (it == full_node.end()) throw GeometryError("cavity boundary node missing from the cavity-free mesh");
    // r is taken with the fluid's outward normal, which points into D.
    rhs -= dot(r_cavity.r[i], free_problem.field.velocity(it->second));
  }
  m.identity_lhs = m.W - m.W0;
  m.identity_rhs = rhs;
  m.identity_residual = std::abs(m.identity_lhs - m.identity_rhs);
  if (options.with_grad_energy) {
    m.grad_energy_D = gradient_energy_on_region(S0, free_problem.field, *cavity, options.region_segments);
  }
  return m;
}

double ratio(double W, double W0) {
  if (W0 == 0.0) throw DatumError("ratio undefined: W0 = 0");
  return (W - W0) / W0;
}

double ratio(const Measurement& m) { return ratio(m.W, m.W0); }

double upper_bound(double r, double K) {
  if (!(K > 0.0)) throw DatumError("upper bound constant must be positive");
  return K * r;
}

double upper_bound(const Measurement& m, double K) { return upper_bound(ratio(m), K); }

double lower_bound(double W, double W0, double C, double gnorm2) {
  if (!(C > 0.0) || !(gnorm2 > 0.0)) throw DatumError("lower bound needs C > 0 and gnorm2 > 0");
  if (W0 == 0.0) throw DatumError("lower bound undefined: W0 = 0");
  const double d = W - W0;
  return C * d * d / (gnorm2 * W0);
}

double lower_bound(const Measurement& m, double C, double gnorm2) { return lower_bound(m.W, m.W0, C, gnorm2); }

SizeEstimate estimate(const Measurement& m, double K, double C) {
  SizeEstimate e;
  e.K = K;
  e.C = C;
  e.gnorm2 = m.gnorm2;
  e.upper = upper_bound(m, K);
  e.lower = lower_bound(m, C, m.gnorm2);
  if (m.area > 0.0) e.true_area = m.area;
  return e;
}

double identity_check(const DomainSpec& domain, const CavityShape& cavity, const DatumSpec& datum,
                      const MeasureOptions& options) {
  MeasureOptions o = options;
  o.with_gnorm = false;
  o.with_grad_energy = false;
  return measure(domain, cavity, datum, o).identity_residual;
}

Calibration calibrate(std::span<const ExperimentRecord> records, double domain_area) {
  Calibration c;
  c.K_hat = 0.0;
  c.C_hat = std::numeric_limits<double>::infinity();
  c.K_low = std::numeric_limits<double>::infinity();
  c.min_w0_over_gnorm2 = std::numeric_limits<double>::infinity();
  std::vector<const ExperimentRecord*> used;
  for (const ExperimentRecord& r : records) {
    if (!(r.ratio > 0.0) || !(r.gnorm2 > 0.0) || !(r.W0 > 0.0)) {
      ++c.excluded;
      continue;
    }
    used.push_back(&r);
  }
  if (used.empty()) throw DatumError("calibration: no record with a positive ratio");
  c.used = used.size();
  for (const ExperimentRecord* r : used) {
    const double area = r->area_frac * domain_area;
    const double gap = r->W - r->W0;
    c.K_hat = std::max(c.K_hat, area / r->ratio);
    c.K_low = std::min(c.K_low, area / r->ratio);
    c.C_hat = std::min(c.C_hat, area * r->gnorm2 * r->W0 / (gap * gap));
    c.C_emp = std::max(c.C_emp, r->grad_energy_D / gap);
    c.min_w0_over_gnorm2 = std::min(c.min_w0_over_gnorm2, r->W0 / r->gnorm2);
  }
  // Round the constants outward so the bounds hold in floating point too.
  for (const ExperimentRecord* r : used) {
    const double area = r->area_frac * domain_area;
    while (upper_bound(r->ratio, c.K_hat) < area) c.K_hat = std::nextafter(c.K_hat, HUGE_VAL);
    while (lower_bound(r->W, r->W0, c.C_hat, r->gnorm2) > area) c.C_hat = std::nextafter(c.C_hat, 0.0);
  }
  return c;
}

std::map<double, Calibration> calibrate_by_d0(std::span<const ExperimentRecord> records,
                                              std::span<const double> d0_values, double domain_area) {
  std::map<double, Calibration> out;
  for (double d0 : d0_values) {
    std::vector<ExperimentRecord> stratum;
    for (const ExperimentRecord& r : records) {
      if (r.d0 == d0) stratum.push_back(r);
    }
    Calibration c;
    c.C_hat = std::numeric_limits<double>::infinity();
    c.K_low = std::numeric_limits<double>::infinity();
    c.min_w0_over_gnorm2 = std::numeric_limits<double>::infinity();
    const bool any = std::any_of(stratum.begin(), stratum.end(), [](const ExperimentRecord& r) {
      return r.ratio > 0.0 && r.gnorm2 > 0.0 && r.W0 > 0.0;
    });
    if (any) {
      c = calibrate(stratum, domain_area);
    } else {
      c.excluded = stratum.size();
    }
    out[d0] = c;
  }
  return out;
}

void apply_calibration(std::span<ExperimentRecord> records, const Calibration& cal) {
  for (ExperimentRecord& r : records) {
    r.upper = r.ratio > 0.0 ? upper_bound(r.ratio, cal.K_hat) : 0.0;
    r.lower = (r.gnorm2 > 0.0 && r.W0 > 0.0) ? lower_bound(r.W, r.W0, cal.C_hat, r.gnorm2) : 0.0;
  }
}

}  // namespace cavlab
