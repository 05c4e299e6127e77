// cavlab: command line front end of the cavity-size experiment lab.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cavlab/error.hpp"
#include "cavlab/lab.hpp"

namespace fs = std::filesystem;
using namespace cavlab;

namespace {

struct Args {
  std::string config;
  std::string out = ".";
  std::string records;
  double h = 0.0;
  int threads = 0;
  int refine = -1;
  bool quiet = false;
};

ExperimentConfig configure(const Args& a) {
  ExperimentConfig c = a.config.empty() ? ExperimentConfig::defaults() : load_config(a.config);
  if (a.h > 0.0) c.h = a.h;
  c.validate();
  return c;
}

fs::path out_file(const Args& a, const std::string& name) {
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + a.out + ": " + ec.message());
  return fs::path(a.out) / name;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

LogFn logger(const Args& a) {
  if (a.quiet) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

MeasureOptions options_with_refine(const ExperimentConfig& c, const Args& a) {
  MeasureOptions o = c.measure_options();
  if (a.refine > 0) o.refine = a.refine;
  return o;
}

int cmd_mesh(const Args& a) {
  const ExperimentConfig c = configure(a);
  const MeshPair pair = make_mesh_pair(c.domain, c.cavity, options_with_refine(c, a));
  const Mesh& mesh = *pair.full;
  const MeshCheck check = check_mesh(mesh);
  const QualityReport q = quality(mesh);
  const fs::path p = out_file(a, "mesh.txt");
  auto os = open_out(p);
  write_mesh(mesh, os);
  std::printf("vertices %zu triangles %zu min_angle %.3f max_angle %.3f h_max %.5f checks %s\n", q.n_vertices,
              q.n_triangles, q.min_angle, q.max_angle, q.h_max, check.ok() ? "ok" : check.message.c_str());
  std::printf("wrote %s\n", p.string().c_str());
  return check.ok() ? 0 : 3;
}

int cmd_solve(const Args& a) {
  const ExperimentConfig c = configure(a);
  const MeasureOptions o = options_with_refine(c, a);
  const MeshPair pair = make_mesh_pair(c.domain, c.cavity, o);
  auto system = assemble(pair.cavity ? pair.cavity : pair.full, c.mu);
  const BoundaryDatum g = project_compatible(make_datum(c.datum(), system->dofs, c.domain), system->dofs);
  const StokesField field = solve_dirichlet(*system, g);
  const BoundaryFunctional r = boundary_residual(*system, field, EdgeTag::Outer);
  {
    auto os = open_out(out_file(a, "field.txt"));
    write_field_table(*system, field, os);
  }
  {
    auto os = open_out(out_file(a, "traction.txt"));
    write_traction_table(cauchy_force_field(*system, r), os);
  }
  const Point f = net_force(r);
  std::printf("W %.17e pairing %.17e net_force %.3e %.3e\n", strain_energy(*system, field), pairing(r, g.values), f.x,
              f.y);
  std::printf("wrote %s and traction.txt\n", out_file(a, "field.txt").string().c_str());
  return 0;
}

int cmd_measure(const Args& a) {
  const ExperimentConfig c = configure(a);
  const Measurement m = measure(c.domain, c.cavity, c.datum(), options_with_refine(c, a));
  nlohmann::json j{{"W", m.W},
                   {"W0", m.W0},
                   {"ratio", m.ratio},
                   {"identity_lhs", m.identity_lhs},
                   {"identity_rhs", m.identity_rhs},
                   {"identity_residual", m.identity_residual},
                   {"grad_energy_D", m.grad_energy_D},
                   {"gnorm2", m.gnorm2},
                   {"h", m.h},
                   {"h_max", m.h_max},
                   {"area", m.area},
                   {"d0", m.d0},
                   {"boundary_W", m.boundary_W},
                   {"boundary_W0", m.boundary_W0},
                   {"net_force_outer", {m.net_force_outer.x, m.net_force_outer.y}},
                   {"net_force_cavity", {m.net_force_cavity.x, m.net_force_cavity.y}},
                   {"h12_ratio", m.h12_ratio},
                   {"datum_regular", m.h4_ok},
                   {"balanced", m.balanced},
                   {"lambda", m.lambda},
                   {"datum", m.datum_id},
                   {"triangles_full", m.triangles_full},
                   {"triangles_cavity", m.triangles_cavity}};
  const std::string text = j.dump(2) + "\n";
  auto os = open_out(out_file(a, "measurement.json"));
  os << text;
  std::cout << text;
  return 0;
}

int cmd_grid(const Args& a) {
  const ExperimentConfig c = configure(a);
  GridResult g = run_grid(c, a.threads, logger(a));
  apply_calibration(g.records, calibrate(g.records, c.domain.area()));
  const fs::path p = out_file(a, "records.csv");
  emit_csv(g.records, p.string());
  auto os = open_out(out_file(a, "skipped.txt"));
  for (const SkippedRun& s : g.skipped) os << s.run_id << ' ' << s.reason << '\n';
  std::printf("%zu records, %zu skipped, wrote %s\n", g.records.size(), g.skipped.size(), p.string().c_str());
  return 0;
}

int cmd_sweep(const Args& a) {
  const ExperimentConfig c = configure(a);
  auto records = run_sweep(c, a.threads, logger(a));
  apply_calibration(records, calibrate(records, c.domain.area()));
  const fs::path p = out_file(a, "sweep.csv");
  emit_csv(records, p.string());
  for (const ExperimentRecord& r : records) std::printf("%s r=%.4f ratio=%.6e\n", r.run_id.c_str(), r.radius, r.ratio);
  std::printf("wrote %s\n", p.string().c_str());
  return 0;
}

int cmd_converge(const Args& a) {
  const ExperimentConfig c = configure(a);
  const int levels = a.refine < 0 ? 3 : a.refine;
  const auto rows = convergence_study(c, levels);
  const fs::path p = out_file(a, "convergence.csv");
  emit_convergence_csv(rows, p.string());
  for (const ConvergenceRow& r : rows) {
    std::printf("level %d h %.5f W %.10e W0 %.10e ratio %.10e d_ratio %.3e\n", r.level, r.h, r.W, r.W0, r.ratio,
                r.dratio);
  }
  std::printf("wrote %s\n", p.string().c_str());
  return 0;
}

std::string records_path(const Args& a) {
  return a.records.empty() ? (fs::path(a.out) / "records.csv").string() : a.records;
}

int cmd_calibrate(const Args& a) {
  const ExperimentConfig c = configure(a);
  auto records = read_csv(records_path(a));
  const Calibration overall = calibrate(records, c.domain.area());
  const std::vector<double> d0s = c.d0_distances();
  const auto by_d0 = calibrate_by_d0(records, d0s, c.domain.area());
  apply_calibration(records, overall);
  emit_csv(records, out_file(a, "calibrated.csv").string());
  const std::string text = calibration_json(overall, by_d0);
  auto os = open_out(out_file(a, "calibration.json"));
  os << text;
  std::cout << text;
  return 0;
}

int cmd_plot(const Args& a) {
  const ExperimentConfig c = configure(a);
  const auto records = read_csv(records_path(a));
  ScatterOverlay overlay{calibrate(records, c.domain.area()), c.domain.area()};
  const fs::path p = out_file(a, "scatter.svg");
  emit_svg_scatter(records, p.string(), overlay);
  std::printf("%zu markers, wrote %s\n", records.size(), p.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cavity size estimation lab for the Stokes system"};
  app.require_subcommand(1, 1);
  Args a;
  auto common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print this help and exit");  // -h would clash with --h
    sub->add_option("--config", a.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--h", a.h, "target mesh size, overrides fem.h")->check(CLI::PositiveNumber);
    sub->add_option("--threads", a.threads, "worker threads, 0 = hardware")->check(CLI::NonNegativeNumber);
    sub->add_option("--refine", a.refine, "uniform refinements (levels for converge)")->check(CLI::NonNegativeNumber);
    sub->add_option("--records", a.records, "records CSV for calibrate and plot (default <out>/records.csv)");
    sub->add_flag("--quiet", a.quiet, "suppress progress lines");
  };
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const Args&);
  };
  const Cmd cmds[] = {
      {"mesh", "generate and check the mesh, write mesh.txt", cmd_mesh},
      {"solve", "solve one Dirichlet problem, write field.txt and traction.txt", cmd_solve},
      {"measure", "W, W0, ratio and the identity check for one cavity", cmd_measure},
      {"grid", "positions x fractions x d0 grid, write records.csv", cmd_grid},
      {"sweep", "concentric radius sweep, write sweep.csv", cmd_sweep},
      {"converge", "mesh convergence study, write convergence.csv", cmd_converge},
      {"calibrate", "calibrate K and C from records, overall and per d0", cmd_calibrate},
      {"plot", "scatter of ratio against area fraction as SVG", cmd_plot},
  };
  for (const Cmd& c : cmds) common(app.add_subcommand(c.name, c.help));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (const Cmd& c : cmds) {
      if (app.got_subcommand(c.name)) return c.run(a);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DatumError& e) {
    std::cerr << "datum error: " << e.what() << '\n';
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << "geometry infeasible: " << e.what() << '\n';
    return 3;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
