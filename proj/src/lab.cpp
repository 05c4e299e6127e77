#include "cavlab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cavlab/error.hpp"

namespace cavlab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

Point read_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + " must be a [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

double read_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

std::vector<double> read_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(read_number(v, where));
  return out;
}

template <class Task>
void run_pool(std::size_t n, int threads, Task&& task) {
  const int workers = std::max(1, std::min<int>(threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency()),
                                                static_cast<int>(n)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

}  // namespace

std::vector<double> SweepSpec::radii() const {
  if (steps < 1) throw ConfigError("sweep steps must be >= 1");
  if (steps == 1) return {r_min};
  std::vector<double> r(steps);
  for (int i = 0; i < steps; ++i) r[i] = r_min + (r_max - r_min) * i / (steps - 1);
  return r;
}

std::vector<Point> ExperimentConfig::default_positions(const DomainSpec& domain) {
  std::vector<Point> p;
  for (double fy : {0.25, 0.5, 0.75}) {
    for (double fx : {0.25, 0.5, 0.75}) {
      if (fx == 0.5 && fy == 0.5) continue;
      p.push_back({domain.corner.x + fx * domain.side, domain.corner.y + fy * domain.side});
    }
  }
  return p;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.positions = default_positions(c.domain);
  return c;
}

DatumSpec ExperimentConfig::datum() const { return DatumSpec::preset(preset, amplitude, value); }

MeasureOptions ExperimentConfig::measure_options() const {
  MeasureOptions o;
  o.h = h;
  o.min_angle = min_angle;
  o.mu = mu;
  o.balance = balance;
  o.family.clear();
  for (const auto& name : family) o.family.push_back(DatumSpec::preset(name, amplitude));
  return o;
}

std::vector<double> ExperimentConfig::d0_distances() const {
  std::vector<double> d;
  for (double v : d0_values) d.push_back(v * d0_unit);
  return d;
}

void ExperimentConfig::validate() const {
  try {
    domain.validate();
  } catch (const GeometryError& e) {
    throw ConfigError(e.what());
  }
  if (!(h > 0.0)) throw ConfigError("fem.h must be positive");
  if (!(min_angle > 0.0 && min_angle <= 33.0)) throw ConfigError("fem.min_angle must lie in (0, 33]");
  if (!(mu > 0.0)) throw ConfigError("fem.mu must be positive");
  const auto& names = known_presets();
  if (std::find(names.begin(), names.end(), preset) == names.end()) {
    throw ConfigError("unknown datum preset \"" + preset + "\"");
  }
  if (family.size() != 3) throw ConfigError("datum.family must list exactly three presets");
  for (const auto& f : family) {
    if (std::find(names.begin(), names.end(), f) == names.end()) {
      throw ConfigError("unknown datum preset \"" + f + "\" in datum.family");
    }
  }
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("fractions must lie in (0, 1)");
  }
  for (const Point& p : positions) {
    if (!(domain.inset(p) > 0.0)) throw ConfigError("position outside the domain");
  }
  for (double d : d0_values) {
    if (!(d > 0.0)) throw ConfigError("d0_values must be positive");
  }
  if (!(d0_unit > 0.0)) throw ConfigError("d0_unit must be positive");
  if (sweep.steps < 1) throw ConfigError("sweep.steps must be >= 1");
  if (!(sweep.r_min > 0.0) || sweep.r_max < sweep.r_min) throw ConfigError("sweep needs 0 < r_min <= r_max");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, {"domain", "cavity", "datum", "fem", "experiment"}, "config");
  ExperimentConfig c;
  try {
    bool unit_given = false;
    if (root.contains("domain")) {
      const json& d = root["domain"];
      check_keys(d, {"side", "corner", "rho0", "M0", "M1"}, "domain");
      if (d.contains("side")) c.domain.side = read_number(d["side"], "domain.side");
      if (d.contains("corner")) c.domain.corner = read_point(d["corner"], "domain.corner");
      if (d.contains("rho0")) c.domain.constants.rho0 = read_number(d["rho0"], "domain.rho0");
      if (d.contains("M0")) c.domain.constants.m0 = read_number(d["M0"], "domain.M0");
      if (d.contains("M1")) c.domain.constants.m1 = read_number(d["M1"], "domain.M1");
    }
    if (root.contains("cavity")) {
      const json& j = root["cavity"];
      check_keys(j, {"kind", "center", "radius", "semi_axes", "angle", "vertices", "rho"}, "cavity");
      const std::string kind = j.value("kind", std::string("circle"));
      CavityShape s;
      if (kind == "circle") {
        if (!j.contains("radius")) throw ConfigError("cavity.radius is required for a circle");
        s = CavityShape::circle(j.contains("center") ? read_point(j["center"], "cavity.center") : Point{0.5, 0.5},
                                read_number(j["radius"], "cavity.radius"));
      } else if (kind == "ellipse") {
        if (!j.contains("semi_axes")) throw ConfigError("cavity.semi_axes is required for an ellipse");
        const Point ab = read_point(j["semi_axes"], "cavity.semi_axes");
        s = CavityShape::ellipse(j.contains("center") ? read_point(j["center"], "cavity.center") : Point{0.5, 0.5},
                                 ab.x, ab.y, j.contains("angle") ? read_number(j["angle"], "cavity.angle") : 0.0);
      } else if (kind == "polygon") {
        if (!j.contains("vertices") || !j["vertices"].is_array()) throw ConfigError("cavity.vertices is required");
        std::vector<Point> v;
        for (const auto& p : j["vertices"]) v.push_back(read_point(p, "cavity.vertices"));
        s = CavityShape::polygon(std::move(v));
      } else {
        throw ConfigError("unknown cavity kind \"" + kind + "\"");
      }
      if (j.contains("rho")) s.rho = read_number(j["rho"], "cavity.rho");
      c.cavity = s;
    }
    if (root.contains("datum")) {
      const json& j = root["datum"];
      check_keys(j, {"preset", "amplitude", "balance", "family", "value"}, "datum");
      if (j.contains("preset")) {
        if (!j["preset"].is_string()) throw ConfigError("datum.preset must be a string");
        c.preset = j["preset"].get<std::string>();
      }
      if (j.contains("amplitude")) c.amplitude = read_number(j["amplitude"], "datum.amplitude");
      if (j.contains("value")) c.value = read_point(j["value"], "datum.value");
      if (j.contains("balance")) {
        if (!j["balance"].is_boolean()) throw ConfigError("datum.balance must be true or false");
        c.balance = j["balance"].get<bool>();
      }
      if (j.contains("family")) {
        if (!j["family"].is_array()) throw ConfigError("datum.family must be an array");
        c.family.clear();
        for (const auto& f : j["family"]) {
          if (!f.is_string()) throw ConfigError("datum.family entries must be strings");
          c.family.push_back(f.get<std::string>());
        }
      }
    }
    if (root.contains("fem")) {
      const json& j = root["fem"];
      check_keys(j, {"h", "min_angle", "mu"}, "fem");
      if (j.contains("h")) c.h = read_number(j["h"], "fem.h");
      if (j.contains("min_angle")) c.min_angle = read_number(j["min_angle"], "fem.min_angle");
      if (j.contains("mu")) c.mu = read_number(j["mu"], "fem.mu");
    }
    c.positions = ExperimentConfig::default_positions(c.domain);
    if (root.contains("experiment")) {
      const json& j = root["experiment"];
      check_keys(j, {"positions", "fractions", "d0_values", "d0_unit", "sweep"}, "experiment");
      if (j.contains("positions")) {
        if (!j["positions"].is_array()) throw ConfigError("experiment.positions must be an array");
        c.positions.clear();
        for (const auto& p : j["positions"]) c.positions.push_back(read_point(p, "experiment.positions"));
      }
      if (j.contains("fractions")) c.fractions = read_numbers(j["fractions"], "experiment.fractions");
      if (j.contains("d0_values")) c.d0_values = read_numbers(j["d0_values"], "experiment.d0_values");
      if (j.contains("d0_unit")) {
        c.d0_unit = read_number(j["d0_unit"], "experiment.d0_unit");
        unit_given = true;
      }
      if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, {"r_min", "r_max", "steps"}, "experiment.sweep");
        if (s.contains("r_min")) c.sweep.r_min = read_number(s["r_min"], "sweep.r_min");
        if (s.contains("r_max")) c.sweep.r_max = read_number(s["r_max"], "sweep.r_max");
        if (s.contains("steps")) {
          if (!s["steps"].is_number_integer()) throw ConfigError("sweep.steps must be an integer");
          c.sweep.steps = s["steps"].get<int>();
        }
      }
    }
    if (!unit_given) c.d0_unit = 0.05 * c.domain.side;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentRecord make_record(const std::string& run_id, const CavityShape& disk, double area_frac, double d0,
                             const Measurement& m, double wall_ms) {
  ExperimentRecord r;
  r.run_id = run_id;
  r.cx = disk.center.x;
  r.cy = disk.center.y;
  r.radius = disk.radius;
  r.area_frac = area_frac;
  r.d0 = d0;
  r.h = m.h;
  r.W0 = m.W0;
  r.W = m.W;
  r.ratio = m.ratio;
  r.grad_energy_D = m.grad_energy_D;
  r.identity_residual = m.identity_residual;
  r.gnorm2 = m.gnorm2;
  r.wall_ms = wall_ms;
  return r;
}

GridResult run_grid(const ExperimentConfig& config, int threads, const LogFn& log) {
  config.validate();
  const DomainSpec& dom = config.domain;
  const std::vector<double> d0s = config.d0_distances();
  struct Task {
    std::size_t pos = 0;
    std::size_t frac = 0;
    CavityShape disk;
    std::vector<std::size_t> d0_index;
  };
  std::vector<Task> tasks;
  GridResult out;
  auto run_id = [](std::size_t i, std::size_t j, std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%02zu_f%02zu_d%02zu", i, j, k);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < config.positions.size(); ++i) {
    for (std::size_t j = 0; j < config.fractions.size(); ++j) {
      Task t;
      t.pos = i;
      t.frac = j;
      t.disk = CavityShape::circle(config.positions[i], radius_for_fraction(dom, config.fractions[j]));
      const double dist = signed_boundary_distance(dom, t.disk);
      for (std::size_t k = 0; k < d0s.size(); ++k) {
        if (dist > 0.0 && dist >= d0s[k] - 1e-12) {
          t.d0_index.push_back(k);
        } else {
          std::ostringstream os;
          os << "disk r=" << t.disk.radius << " at (" << t.disk.center.x << ", " << t.disk.center.y
             << ") keeps distance " << dist << " < d0 " << d0s[k];
          out.skipped.push_back({run_id(i, j, k), os.str()});
          if (log) log("skip " + run_id(i, j, k) + ": " + os.str());
        }
      }
      if (!t.d0_index.empty()) tasks.push_back(std::move(t));
    }
  }
  if (tasks.empty()) throw GeometryError("no feasible combination of position, fraction and d0");

  const DatumSpec datum = config.datum();
  const MeasureOptions opts = config.measure_options();
  std::vector<std::vector<ExperimentRecord>> produced(tasks.size());
  std::vector<double> gaps(tasks.size(), 0.0);
  run_pool(tasks.size(), threads, [&](std::size_t n) {
    const Task& t = tasks[n];
    const auto start = std::chrono::steady_clock::now();
    const Measurement m = measure(dom, t.disk, datum, opts);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    gaps[n] = std::max(std::abs(m.boundary_W - m.W) / (1.0 + m.W), std::abs(m.boundary_W0 - m.W0) / (1.0 + m.W0));
    for (std::size_t k : t.d0_index) {
      produced[n].push_back(make_record(run_id(t.pos, t.frac, k), t.disk, m.area / dom.area(), d0s[k], m, ms));
    }
    if (log) log("done " + run_id(t.pos, t.frac, t.d0_index.front()) + fmt(" ratio=%.6e", m.ratio));
  });
  for (double g : gaps) out.max_duality_gap = std::max(out.max_duality_gap, g);
  for (auto& batch : produced) {
    for (auto& r : batch) out.records.push_back(std::move(r));
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const ExperimentRecord& a, const ExperimentRecord& b) { return a.run_id < b.run_id; });
  std::sort(out.skipped.begin(), out.skipped.end(),
            [](const SkippedRun& a, const SkippedRun& b) { return a.run_id < b.run_id; });
  return out;
}

std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& config, int threads, const LogFn& log) {
  config.validate();
  const DomainSpec& dom = config.domain;
  const Point center{dom.corner.x + 0.5 * dom.side, dom.corner.y + 0.5 * dom.side};
  const std::vector<double> radii = config.sweep.radii();
  std::vector<CavityShape> disks;
  for (double r : radii) {
    CavityShape d = CavityShape::circle(center, r);
    d.validate();
    boundary_distance(dom, d);
    disks.push_back(d);
  }
  const DatumSpec datum = config.datum();
  const MeasureOptions opts = config.measure_options();
  std::vector<ExperimentRecord> out(disks.size());
  run_pool(disks.size(), threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const Measurement m = measure(dom, disks[i], datum, opts);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    char id[32];
    std::snprintf(id, sizeof id, "s%02zu", i);
    out[i] = make_record(id, disks[i], m.area / dom.area(), m.d0, m, ms);
    if (log) log(std::string("done ") + id + fmt(" r=%.4f", disks[i].radius) + fmt(" ratio=%.6e", m.ratio));
  });
  return out;
}

std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& config, int levels) {
  if (levels < 2) throw ConfigError("a convergence study needs at least two levels");
  config.validate();
  std::vector<ConvergenceRow> rows;
  for (int l = 0; l < levels; ++l) {
    MeasureOptions o = config.measure_options();
    o.refine = l;
    const Measurement m = measure(config.domain, config.cavity, config.datum(), o);
    ConvergenceRow r;
    r.level = l;
    r.h = m.h;
    r.W = m.W;
    r.W0 = m.W0;
    r.ratio = m.ratio;
    r.identity_residual = m.identity_residual;
    r.gnorm2 = m.gnorm2;
    if (!rows.empty()) {
      const ConvergenceRow& p = rows.back();
      auto rel = [](double now, double before) {
        return now == before ? 0.0 : std::abs(now - before) / std::max(std::abs(now), std::abs(before));
      };
      r.dW = rel(r.W, p.W);
      r.dW0 = rel(r.W0, p.W0);
      r.dratio = rel(r.ratio, p.ratio);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace cavlab
