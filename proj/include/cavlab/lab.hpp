#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cavlab/estimator.hpp"

namespace cavlab {

struct SweepSpec {
  double r_min = 0.05;
  double r_max = 0.45;
  int steps = 9;

  std::vector<double> radii() const;
};

struct ExperimentConfig {
  DomainSpec domain;
  std::optional<CavityShape> cavity;
  std::string preset = "tangential-top";
  double amplitude = 1.0;
  Point value{1.0, 0.0};  // constant preset only
  bool balance = false;
  std::vector<std::string> family{"tangential-top", "tangential-right", "poiseuille-trace"};
  double h = 1.0 / 64.0;
  double min_angle = 25.0;
  double mu = 1.0;
  std::vector<Point> positions;  // absolute coordinates
  std::vector<double> fractions{0.002, 0.031, 0.071};
  std::vector<double> d0_values{5.0, 3.0, 2.0, 1.0};  // multiples of d0_unit
  double d0_unit = 0.05;
  SweepSpec sweep;

  /// Default eight centres: {1/4, 1/2, 3/4}^2 without the middle, scaled to the domain.
  static std::vector<Point> default_positions(const DomainSpec& domain);
  static ExperimentConfig defaults();

  DatumSpec datum() const;
  MeasureOptions measure_options() const;
  /// Requested distances in domain units, d0_values[i] * d0_unit.
  std::vector<double> d0_distances() const;
  void validate() const;
};

/// Strict JSON parsing; unknown keys and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct SkippedRun {
  std::string run_id;
  std::string reason;
};

struct GridResult {
  std::vector<ExperimentRecord> records;  // sorted by run id
  std::vector<SkippedRun> skipped;
  /// Largest |boundary pairing - energy| / (1 + energy) over all solves.
  double max_duality_gap = 0.0;
};

using LogFn = std::function<void(const std::string&)>;

/// positions x fractions x d0 values. A combination runs only when the disk
/// keeps the requested distance to the outer boundary; the measurement of one
/// disk is shared by every d0 it satisfies.
GridResult run_grid(const ExperimentConfig& config, int threads = 0, const LogFn& log = {});

/// Concentric disks at the domain centre, in radius order.
std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& config, int threads = 0, const LogFn& log = {});

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  double W = 0.0;
  double W0 = 0.0;
  double ratio = 0.0;
  double identity_residual = 0.0;
  double gnorm2 = 0.0;
  double dW = 0.0;  // relative change from the previous level
  double dW0 = 0.0;
  double dratio = 0.0;
};

/// One measurement on `levels` uniformly refined mesh pairs.
std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& config, int levels);

ExperimentRecord make_record(const std::string& run_id, const CavityShape& disk, double area_frac, double d0,
                             const Measurement& m, double wall_ms);

void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
std::string csv_text(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_csv(const std::string& path);
std::vector<ExperimentRecord> parse_csv(const std::string& text);

void emit_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path);

struct ScatterOverlay {
  Calibration calibration;
  double domain_area = 1.0;
};

/// Scatter of (ratio, area_frac), one circle per record, optionally with the
/// calibrated sector lines and the lower-bound curve.
std::string svg_scatter(const std::vector<ExperimentRecord>& records, const std::optional<ScatterOverlay>& overlay);
void emit_svg_scatter(const std::vector<ExperimentRecord>& records, const std::string& path,
                      const std::optional<ScatterOverlay>& overlay = std::nullopt);

/// Calibration summary as JSON text (overall plus one entry per d0).
std::string calibration_json(const Calibration& overall, const std::map<double, Calibration>& by_d0);

}  // namespace cavlab
