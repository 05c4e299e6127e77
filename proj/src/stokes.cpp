#include <Eigen/SparseCholesky>
#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavlab/error.hpp"
#include "cavlab/fem.hpp"
#include "p2.hpp"

namespace cavlab {

using Triplet = Eigen::Triplet<double>;
using Vec = Eigen::VectorXd;

struct SolverCache {
  SolverKind kind = SolverKind::Direct;
  std::vector<int> free_pos;  // velocity dof -> free index, or -1
  int nf = 0;
  int np = 0;
  double domain_area = 0.0;
  SpMat Aff;
  SpMat Bf;
  Vec m;

  SpMat K;
  Eigen::UmfPackLU<SpMat> lu;

  Eigen::SimplicialLLT<SpMat> llt;

  int size() const { return nf + np + 1; }

  Vec apply(const Vec& x) const {
    const auto u = x.head(nf);
    const auto p = x.segment(nf, np);
    const double lam = x[nf + np];
    Vec y(size());
    y.head(nf) = Aff * u + Bf.transpose() * p;
    y.segment(nf, np) = Bf * u + m * lam;
    y[nf + np] = m.dot(p);
    return y;
  }

  Vec solve(const Vec& b) const { return kind == SolverKind::Direct ? solve_direct(b) : solve_schur(b); }

  // K is factorised with the mean constraint replaced by a pin on the first
  // pressure dof; the constant-pressure kernel then recovers the multiplier
  // and the mean exactly.
  Vec solve_direct(const Vec& b) const {
    const double lam = b.segment(nf, np).sum() / domain_area;
    Vec rhs = b;
    rhs.segment(nf, np) -= lam * m;
    rhs[nf + np] = 0.0;
    Vec x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw SolverError("sparse LU back-substitution failed");
    x.segment(nf, np).array() += (b[nf + np] - m.dot(x.segment(nf, np))) / domain_area;
    x[nf + np] = lam;
    return x;
  }

  // Block elimination of the velocity, preconditioned CG on the pressure
  // Schur complement (kernel: constants), multiplier from the compatibility
  // of the reduced right-hand side.
  Vec solve_schur(const Vec& b) const {
    const Vec f = b.head(nf);
    const Vec g = b.segment(nf, np);
    const double h = b[nf + np];
    const Vec ainv_f = llt.solve(f);
    const Vec c = Bf * ainv_f - g;
    const double lam = -c.sum() / domain_area;
    Vec rhs = c + lam * m;
    rhs.array() -= rhs.sum() / np;

    auto S = [&](const Vec& q) -> Vec { return Bf * llt.solve(Vec(Bf.transpose() * q)); };
    Vec p = Vec::Zero(np);
    Vec r = rhs;
    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0) {
      Vec z = r.cwiseQuotient(m);
      Vec d = z;
      double rz = r.dot(z);
      for (int it = 0; it < 4 * np + 100; ++it) {
        const Vec Sd = S(d);
        const double dSd = d.dot(Sd);
        if (!(dSd > 0.0)) break;
        const double alpha = rz / dSd;
        p += alpha * d;
        r -= alpha * Sd;
        if (r.norm() <= 1e-14 * rhs_norm) break;
        z = r.cwiseQuotient(m);
        const double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
      }
    }
    p.array() += (h - m.dot(p)) / domain_area;
    Vec x(size());
    x.head(nf) = llt.solve(Vec(f - Bf.transpose() * p));
    x.segment(nf, np) = p;
    x[nf + np] = lam;
    return x;
  }
};

namespace {

std::shared_ptr<SolverCache> build_cache(const FESystem& sys, SolverKind kind) {
  auto c = std::make_shared<SolverCache>();
  c->kind = kind;
  const int nv = sys.dofs.n_velocity();
  c->np = sys.dofs.n_pressure();
  c->nf = static_cast<int>(sys.free.size());
  c->free_pos.assign(nv, -1);
  for (int i = 0; i < c->nf; ++i) c->free_pos[sys.free[i]] = i;
  c->m = sys.m;
  c->domain_area = sys.m.sum();

  std::vector<Triplet> ta;
  ta.reserve(sys.A.nonZeros());
  for (int j = 0; j < sys.A.outerSize(); ++j) {
    const int fj = c->free_pos[j];
    if (fj < 0) continue;
    for (SpMat::InnerIterator it(sys.A, j); it; ++it) {
      const int fi = c->free_pos[it.row()];
      if (fi >= 0) ta.emplace_back(fi, fj, it.value());
    }
  }
  c->Aff.resize(c->nf, c->nf);
  c->Aff.setFromTriplets(ta.begin(), ta.end());

  std::vector<Triplet> tb;
  tb.reserve(sys.B.nonZeros());
  for (int j = 0; j < sys.B.outerSize(); ++j) {
    const int fj = c->free_pos[j];
    if (fj < 0) continue;
    for (SpMat::InnerIterator it(sys.B, j); it; ++it) tb.emplace_back(it.row(), fj, it.value());
  }
  c->Bf.resize(c->np, c->nf);
  c->Bf.setFromTriplets(tb.begin(), tb.end());

  if (kind == SolverKind::Direct) {
    std::vector<Triplet> tk = ta;
    tk.reserve(ta.size() + 2 * tb.size() + 2 * c->np);
    for (const Triplet& t : tb) {
      tk.emplace_back(c->nf + t.row(), t.col(), t.value());
      tk.emplace_back(t.col(), c->nf + t.row(), t.value());
    }
    const int lrow = c->nf + c->np;
    tk.emplace_back(c->nf, lrow, 1.0);
    tk.emplace_back(lrow, c->nf, 1.0);
    c->K.resize(c->size(), c->size());
    c->K.setFromTriplets(tk.begin(), tk.end());
    c->K.makeCompressed();
    c->lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
    c->lu.analyzePattern(c->K);
    c->lu.factorize(c->K);
    if (c->lu.info() != Eigen::Success) {
      throw SolverError("saddle-point factorisation failed: ");
    }
  } else {
    c->llt.compute(c->Aff);
    if (c->llt.info() != Eigen::Success) throw SolverError("Cholesky factorisation of the viscous block failed");
  }
  return c;
}

std::shared_ptr<SolverCache> cache_for(const FESystem& sys, SolverKind kind) {
  std::lock_guard<std::mutex> lock(sys.cache_mutex);
  auto& slot = kind == SolverKind::Direct ? sys.direct_cache : sys.schur_cache;
  if (!slot) slot = build_cache(sys, kind);
  return slot;
}

StokesField solve_core(const FESystem& sys, const Vec& ud, const SolveOptions& opts) {
  const auto cache = cache_for(sys, opts.kind);
  const int nf = cache->nf;
  const int np = cache->np;

  const Vec t = sys.A * ud;
  const Vec s = sys.B * ud;
  Vec b = Vec::Zero(cache->size());
  for (int i = 0; i < nf; ++i) b[i] = -t[sys.free[i]];
  b.segment(nf, np) = -s;

  Vec x = Vec::Zero(cache->size());
  double rel = 0.0;
  const double bnorm = b.norm();
  if (bnorm > 0.0) {
    x = cache->solve(b);
    Vec r = b - cache->apply(x);
    rel = r.norm() / bnorm;
    for (int step = 0; step < opts.max_refinement_steps && rel > 0.1 * opts.residual_tol; ++step) {
      x += cache->solve(r);
      r = b - cache->apply(x);
      const double next = r.norm() / bnorm;
      if (!(next < rel)) {
        rel = std::min(rel, next);
        break;
      }
      rel = next;
    }
    if (!std::isfinite(rel)) throw SolverError("saddle-point solve produced non-finite values");
    if (rel > opts.residual_tol) {
      std::ostringstream os;
      os << "saddle-point solve stalled at relative residual " << rel;
      throw SolverError(os.str());
    }
  }

  StokesField f;
  f.mesh = sys.mesh;
  f.u = ud;
  for (int i = 0; i < nf; ++i) f.u[sys.free[i]] = x[i];
  f.p = x.segment(nf, np);
  f.multiplier = x[nf + np];
  f.residual = rel;
  return f;
}

}  // namespace

std::shared_ptr<FESystem> assemble(std::shared_ptr<const Mesh> mesh, double mu) {
  if (!mesh) throw SolverError("assemble: null mesh");
  if (!(mu > 0.0)) throw SolverError("assemble: viscosity must be positive");
  auto sys = std::make_shared<FESystem>();
  sys->mesh = mesh;
  sys->mu = mu;
  sys->dofs = DofMap::build(*mesh);
  const DofMap& d = sys->dofs;
  const int nv = d.n_velocity();
  const int np = d.n_pressure();

  std::vector<Triplet> ta;
  std::vector<Triplet> tb;
  ta.reserve(mesh->n_triangles() * 144);
  tb.reserve(mesh->n_triangles() * 36);
  sys->m = Vec::Zero(np);

  const auto& rule = p2::rule6();
  for (std::size_t t = 0; t < mesh->n_triangles(); ++t) {
    const auto& tv = mesh->triangles[t];
    const p2::Triangle tri(mesh->vertices[tv[0]], mesh->vertices[tv[1]], mesh->vertices[tv[2]]);
    if (!(tri.jac > 0.0)) {
      std::ostringstream os;
      os << "inverted triangle " << t << " (" << tv[0] << ", " << tv[1] << ", " << tv[2]
         << "), jacobian " << tri.jac;
      throw SolverError(os.str());
    }
    const double area = tri.area();
    double ka[12][12] = {};
    double kb[3][12] = {};
    for (const auto& q : rule) {
      const auto g = p2::gradients(tri, q.lambda);
      const double w = q.weight * area;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          const double gg = dot(g[i], g[j]);
          const double gi[2] = {g[i].x, g[i].y};
          const double gj[2] = {g[j].x, g[j].y};
          for (int c = 0; c < 2; ++c) {
            for (int e = 0; e < 2; ++e) {
              ka[2 * i + c][2 * j + e] += w * mu * ((c == e ? gg : 0.0) + gj[c] * gi[e]);
            }
          }
        }
        for (int k = 0; k < 3; ++k) {
          kb[k][2 * i] -= w * q.lambda[k] * g[i].x;
          kb[k][2 * i + 1] -= w * q.lambda[k] * g[i].y;
        }
      }
    }
    const auto nodes = d.tri_nodes(*mesh, t);
    for (int a = 0; a < 12; ++a) {
      const int ga = 2 * nodes[a / 2] + a % 2;
      for (int b = 0; b < 12; ++b) ta.emplace_back(ga, 2 * nodes[b / 2] + b % 2, ka[a][b]);
      for (int k = 0; k < 3; ++k) tb.emplace_back(tv[k], ga, kb[k][a]);
    }
    for (int k = 0; k < 3; ++k) sys->m[tv[k]] += area / 3.0;
  }
  sys->A.resize(nv, nv);
  sys->A.setFromTriplets(ta.begin(), ta.end());
  sys->B.resize(np, nv);
  sys->B.setFromTriplets(tb.begin(), tb.end());

  sys->has_cavity_boundary = d.has_boundary(EdgeTag::Cavity);
  std::vector<char> is_dir(nv, 0);
  for (int n = 0; n < d.n_nodes(); ++n) {
    if (d.node_tag[n] >= 0) is_dir[2 * n] = is_dir[2 * n + 1] = 1;
  }
  for (int i = 0; i < nv; ++i) (is_dir[i] ? sys->dirichlet : sys->free).push_back(i);
  return sys;
}

std::shared_ptr<FESystem> assemble(const Mesh& mesh, double mu) {
  return assemble(std::make_shared<const Mesh>(mesh), mu);
}

std::vector<Point> nodal_trace(const DofMap& dofs, const BoundaryDatum& datum) {
  std::vector<Point> out(dofs.n_nodes(), Point{});
  for (std::size_t i = 0; i < datum.nodes.size(); ++i) {
    if (datum.nodes[i] < 0 || datum.nodes[i] >= dofs.n_nodes()) {
      throw SolverError("datum node outside the mesh");
    }
    out[datum.nodes[i]] = datum.values[i];
  }
  return out;
}

StokesField solve_dirichlet(const FESystem& system, const BoundaryDatum& datum, bool cavity_zero,
                            const SolveOptions& options) {
  if (system.has_cavity_boundary && !cavity_zero) {
    throw SolverError("mesh has a cavity boundary; only the no-slip condition is supported there");
  }
  if (datum.nodes != system.dofs.boundary_nodes(EdgeTag::Outer)) {
    throw SolverError("datum was sampled on a different mesh");
  }
  const double flux = boundary_flux(system.dofs, datum.nodes, datum.values);
  if (!(std::abs(flux) <= options.flux_tol)) {
    std::ostringstream os;
    os << "incompatible datum: boundary flux " << flux << " exceeds " << options.flux_tol;
    throw DatumError(os.str());
  }
  const auto trace = nodal_trace(system.dofs, datum);
  return solve_with_trace(system, trace, options);
}

StokesField solve_with_trace(const FESystem& system, std::span<const Point> node_values,
                             const SolveOptions& options) {
  const DofMap& d = system.dofs;
  if (static_cast<int>(node_values.size()) != d.n_nodes()) {
    throw SolverError("trace vector has the wrong length");
  }
  Vec ud = Vec::Zero(d.n_velocity());
  for (int n = 0; n < d.n_nodes(); ++n) {
    if (d.node_tag[n] < 0) continue;
    ud[2 * n] = node_values[n].x;
    ud[2 * n + 1] = node_values[n].y;
  }
  return solve_core(system, ud, options);
}

// Summed from the pointwise strain rather than as u^T A u, so rigid motions
// give roundoff squared instead of roundoff times the size of A.
double strain_energy(const FESystem& system, const Vec& u) {
  const Mesh& mesh = *system.mesh;
  if (u.size() != system.dofs.n_velocity()) throw SolverError("strain_energy: size mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tv = mesh.triangles[t];
    const p2::Triangle tri(mesh.vertices[tv[0]], mesh.vertices[tv[1]], mesh.vertices[tv[2]]);
    const auto nodes = system.dofs.tri_nodes(mesh, t);
    double local = 0.0;
    for (const auto& q : p2::rule6()) {
      const auto g = p2::gradients(tri, q.lambda);
      double exx = 0.0, eyy = 0.0, exy = 0.0;
      for (int i = 0; i < 6; ++i) {
        const double ux = u[2 * nodes[i]];
        const double uy = u[2 * nodes[i] + 1];
        exx += ux * g[i].x;
        eyy += uy * g[i].y;
        exy += 0.5 * (ux * g[i].y + uy * g[i].x);
      }
      local += q.weight * (exx * exx + eyy * eyy + 2.0 * exy * exy);
    }
    total += local * tri.area();
  }
  return 2.0 * system.mu * total;
}

double strain_energy(const FESystem& system, const StokesField& field) {
  return strain_energy(system, field.u);
}

namespace {

Vec full_residual(const FESystem& system, const StokesField& field) {
  return system.A * field.u + system.B.transpose() * field.p;
}

}  // namespace

BoundaryFunctional boundary_residual(const FESystem& system, const StokesField& field, EdgeTag tag) {
  if (!system.dofs.has_boundary(tag)) {
    throw SolverError("mesh has no " + to_string(tag) + " boundary");
  }
  const Vec r = full_residual(system, field);
  BoundaryFunctional f;
  f.tag = tag;
  f.nodes = system.dofs.boundary_nodes(tag);
  f.r.reserve(f.nodes.size());
  for (int n : f.nodes) f.r.push_back({r[2 * n], r[2 * n + 1]});
  return f;
}

double pairing(const BoundaryFunctional& functional, std::span<const Point> values) {
  if (values.size() != functional.nodes.size()) throw SolverError("pairing: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += dot(functional.r[i], values[i]);
  return s;
}

double pairing_nodal(const BoundaryFunctional& functional, std::span<const Point> node_values) {
  double s = 0.0;
  for (std::size_t i = 0; i < functional.nodes.size(); ++i) {
    s += dot(functional.r[i], node_values[functional.nodes[i]]);
  }
  return s;
}

Point net_force(const BoundaryFunctional& functional) {
  Point f{};
  for (const Point& r : functional.r) f = f + r;
  return f;
}

Point net_force(const FESystem& system, const StokesField& field, EdgeTag tag) {
  return net_force(boundary_residual(system, field, tag));
}

double interior_residual(const FESystem& system, const StokesField& field) {
  const Vec r = full_residual(system, field);
  double worst = 0.0;
  for (int i : system.free) worst = std::max(worst, std::abs(r[i]));
  return worst;
}

}  // namespace cavlab
