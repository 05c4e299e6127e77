#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "cavlab/datum.hpp"
#include "cavlab/dofmap.hpp"
#include "cavlab/geometry.hpp"
#include "cavlab/mesh.hpp"

namespace cavlab {

using SpMat = Eigen::SparseMatrix<double>;

enum class SolverKind { Direct, SchurCG };

struct SolverCache;

/// Assembled Taylor-Hood P2-P1 Stokes operator on one mesh.
///   A(i,j) = 2 mu int e(phi_j) : e(phi_i)   velocity x velocity
///   B(k,j) = -int q_k div phi_j             pressure x velocity
///   m(k)   = int q_k
/// Every true boundary node is Dirichlet; the factorisation of the reduced
/// saddle-point matrix is built on first solve and reused.
struct FESystem {
  std::shared_ptr<const Mesh> mesh;
  double mu = 1.0;
  DofMap dofs;
  SpMat A;
  SpMat B;
  Eigen::VectorXd m;
  bool has_cavity_boundary = false;
  std::vector<int> dirichlet;  // sorted velocity dofs on the boundary
  std::vector<int> free;       // the remaining velocity dofs

  mutable std::mutex cache_mutex;
  mutable std::shared_ptr<SolverCache> direct_cache;
  mutable std::shared_ptr<SolverCache> schur_cache;

  const Mesh& mesh_ref() const { return *mesh; }
};

std::shared_ptr<FESystem> assemble(std::shared_ptr<const Mesh> mesh, double mu = 1.0);
std::shared_ptr<FESystem> assemble(const Mesh& mesh, double mu = 1.0);

/// Discrete (u, p). u holds two coefficients per P2 node, p one per vertex.
struct StokesField {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd u;
  Eigen::VectorXd p;
  double residual = 0.0;    // relative algebraic residual of the KKT solve
  double multiplier = 0.0;  // Lagrange multiplier of the zero-mean constraint

  Point velocity(int node) const { return {u[2 * node], u[2 * node + 1]}; }
};

struct SolveOptions {
  SolverKind kind = SolverKind::Direct;
  double flux_tol = 1e-10;
  double residual_tol = 1e-10;
  int max_refinement_steps = 6;
};

/// u = g on the outer boundary and u = 0 on the cavity boundary. `cavity_zero`
/// must be true when the mesh has a cavity boundary.
StokesField solve_dirichlet(const FESystem& system, const BoundaryDatum& datum, bool cavity_zero = true,
                            const SolveOptions& options = {});

/// Solve with arbitrary values on every boundary node (indexed by node id;
/// interior entries ignored). No flux check beyond solvability.
StokesField solve_with_trace(const FESystem& system, std::span<const Point> node_values,
                             const SolveOptions& options = {});

/// Datum values scattered to a vector over all P2 nodes (zero off the outer boundary).
std::vector<Point> nodal_trace(const DofMap& dofs, const BoundaryDatum& datum);

/// 2 mu int |e(u_h)|^2 = u^T A u.
double strain_energy(const FESystem& system, const StokesField& field);
/// u^T A u for an arbitrary coefficient vector.
double strain_energy(const FESystem& system, const Eigen::VectorXd& u);

/// Interpolant of an analytic velocity field at the P2 nodes.
template <class F>
Eigen::VectorXd interpolate(const DofMap& dofs, F&& f) {
  Eigen::VectorXd u(dofs.n_velocity());
  for (int n = 0; n < dofs.n_nodes(); ++n) {
    const Point v = f(dofs.node_pos[n]);
    u[2 * n] = v.x;
    u[2 * n + 1] = v.y;
  }
  return u;
}

/// r_i = a(u_h, phi_i) - (p_h, div phi_i) at the boundary nodes of one tag.
/// The outward normal is that of the computational domain.
struct BoundaryFunctional {
  EdgeTag tag = EdgeTag::Outer;
  std::vector<int> nodes;  // sorted
  std::vector<Point> r;
};

BoundaryFunctional boundary_residual(const FESystem& system, const StokesField& field, EdgeTag tag);
/// sum_i r_i . v_i over the functional's nodes; `values` is indexed like `nodes`.
double pairing(const BoundaryFunctional& functional, std::span<const Point> values);
/// Pairing with a field given at every P2 node.
double pairing_nodal(const BoundaryFunctional& functional, std::span<const Point> node_values);
/// Pairing with the constant fields e1, e2.
Point net_force(const BoundaryFunctional& functional);
Point net_force(const FESystem& system, const StokesField& field, EdgeTag tag);

/// Interior residual max over free dofs of |a(u, phi) - (p, div phi)|.
double interior_residual(const FESystem& system, const StokesField& field);

/// L2 representative of the traction: M psi = r with the P2 boundary mass matrix.
struct TractionTable {
  EdgeTag tag = EdgeTag::Outer;
  std::vector<int> nodes;  // walk order along the boundary loop(s)
  std::vector<Point> pos;
  std::vector<double> s;  // arc length from the loop start
  std::vector<Point> psi;
};

TractionTable cauchy_force_field(const FESystem& system, const BoundaryFunctional& functional);
/// int psi . g over the tagged boundary with the P2 mass matrix.
double traction_pairing(const FESystem& system, const TractionTable& traction,
                        std::span<const Point> node_values);

/// Pointwise evaluation of u_h, grad u_h and p_h by bucketed point location.
class FieldEvaluator {
 public:
  FieldEvaluator(const FESystem& system, const StokesField& field);

  /// Triangle containing p, or -1.
  int locate(Point p) const;
  Point velocity(Point p) const;
  /// Row-major [du1/dx, du1/dy, du2/dx, du2/dy].
  std::array<double, 4> gradient(Point p) const;
  double pressure(Point p) const;

 private:
  std::array<double, 3> barycentric(int t, Point p) const;

  const FESystem& system_;
  const StokesField& field_;
  Point lo_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// int_D |grad u_h|^2 on a mesh covering D. Triangles crossed by the boundary
/// of D are clipped against a fine polygon of D.
double gradient_energy_on_region(const FESystem& system, const StokesField& field,
                                 const CavityShape& shape, int polygon_segments = 4096);

/// ||g||_{H^{3/2}} with g the P2 boundary interpolant:
///   ||g||^2 = ||g||^2_{L2} + ||g'||^2_{L2} + int int |g'(x)-g'(y)|^2 / |x-y|^2 ds ds
/// (chord distance in the kernel). The kernel integral is infinite when g'
/// jumps at a corner; the returned value then grows like log(1/h).
double h32_norm(const DofMap& dofs, const BoundaryDatum& datum);

/// Nodal table: x y u1 u2 p (p interpolated linearly to midpoints).
void write_field_table(const FESystem& system, const StokesField& field, std::ostream& os);
/// Boundary table: s x y psi1 psi2.
void write_traction_table(const TractionTable& traction, std::ostream& os);

}  // namespace cavlab
