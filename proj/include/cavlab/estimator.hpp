#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cavlab/balance.hpp"
#include "cavlab/datum.hpp"
#include "cavlab/fem.hpp"
#include "cavlab/geometry.hpp"
#include "cavlab/mesh.hpp"

namespace cavlab {

struct MeasureOptions {
  double h = 1.0 / 64.0;
  double min_angle = 25.0;
  double mu = 1.0;
  int refine = 0;  // uniform refinements applied to both meshes
  bool balance = false;
  std::vector<DatumSpec> family = balancing_family();
  SolverKind solver = SolverKind::Direct;
  bool with_gnorm = true;
  bool with_grad_energy = true;
  int region_segments = 4096;
  double c0 = 100.0;
};

struct Measurement {
  double W = 0.0;
  double W0 = 0.0;
  double ratio = 0.0;
  double identity_lhs = 0.0;  // W - W0
  double identity_rhs = 0.0;  // int_{dD} u0 . sigma(u,p) n, n exterior to D
  double identity_residual = 0.0;
  double grad_energy_D = 0.0;
  double gnorm2 = 0.0;  // ||g||^2_{H^{3/2}}
  double h = 0.0;       // target mesh size after refinement
  double h_max = 0.0;   // longest edge of the cavity-free mesh
  double area = 0.0;    // |D|, analytic
  double d0 = 0.0;
  double boundary_W = 0.0;  // pairing of the outer residual with g
  double boundary_W0 = 0.0;
  Point net_force_outer;
  Point net_force_cavity;
  double h12_ratio = 0.0;
  bool h4_ok = false;
  bool balanced = false;
  std::array<double, 3> lambda{};
  std::string datum_id;
  std::size_t triangles_full = 0;
  std::size_t triangles_cavity = 0;
};

/// Nested meshes: the cavity-free mesh carries the cavity polygon as an
/// interior interface and the cavity mesh is its fluid part.
struct MeshPair {
  std::shared_ptr<const Mesh> full;
  std::shared_ptr<const Mesh> cavity;  // null when there is no cavity
};

MeshPair make_mesh_pair(const DomainSpec& domain, const std::optional<CavityShape>& cavity,
                        const MeasureOptions& options);

Measurement measure(const DomainSpec& domain, const std::optional<CavityShape>& cavity, const DatumSpec& datum,
                    const MeasureOptions& options = {});
Measurement measure(const DomainSpec& domain, const std::optional<CavityShape>& cavity, const DatumSpec& datum,
                    const MeshPair& meshes, const MeasureOptions& options);

/// (W - W0) / W0. Throws DatumError when W0 = 0.
double ratio(const Measurement& m);
double ratio(double W, double W0);
double upper_bound(const Measurement& m, double K);
double upper_bound(double ratio, double K);
double lower_bound(const Measurement& m, double C, double gnorm2);
double lower_bound(double W, double W0, double C, double gnorm2);

struct SizeEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double K = 0.0;
  double C = 0.0;
  double gnorm2 = 0.0;
  std::optional<double> true_area;
  bool contains_truth() const { return !true_area || (lower <= *true_area && *true_area <= upper); }
};

SizeEstimate estimate(const Measurement& m, double K, double C);

/// |W - W0 - int_{dD} u0 . sigma n|.
double identity_check(const DomainSpec& domain, const CavityShape& cavity, const DatumSpec& datum,
                      const MeasureOptions& options = {});

struct ExperimentRecord {
  std::string run_id;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double area_frac = 0.0;
  double d0 = 0.0;
  double h = 0.0;
  double W0 = 0.0;
  double W = 0.0;
  double ratio = 0.0;
  double grad_energy_D = 0.0;
  double identity_residual = 0.0;
  double gnorm2 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double wall_ms = 0.0;
};

struct Calibration {
  double K_hat = 0.0;  // max |D| / ratio
  double C_hat = 0.0;  // min |D| gnorm2 W0 / (W - W0)^2
  double K_low = 0.0;  // min |D| / ratio, lower edge of the sector
  double C_emp = 0.0;  // max grad_energy_D / (W - W0)
  double min_w0_over_gnorm2 = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

/// In-sample constants. Records with ratio <= 0 are excluded; throws when none
/// remain. `domain_area` converts area fractions to |D|.
Calibration calibrate(std::span<const ExperimentRecord> records, double domain_area = 1.0);

/// Calibration per requested d0 (exact match of the record value), keyed by d0.
/// Empty strata map to a calibration with used = 0.
std::map<double, Calibration> calibrate_by_d0(std::span<const ExperimentRecord> records,
                                              std::span<const double> d0_values, double domain_area = 1.0);

/// Fills lower/upper of each record from a calibration.
void apply_calibration(std::span<ExperimentRecord> records, const Calibration& cal);

}  // namespace cavlab
