#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cavlab/error.hpp"
#include "cavlab/lab.hpp"

namespace py = pybind11;
using namespace cavlab;

namespace {

Point to_point(const std::pair<double, double>& p) { return {p.first, p.second}; }
std::pair<double, double> from_point(Point p) { return {p.x, p.y}; }

}  // namespace

PYBIND11_MODULE(_cavlab, m) {
  m.doc() = "Cavity size estimates from Stokes boundary measurements";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<DatumError>(m, "DatumError", PyExc_ValueError);
  py::register_exception<MeshError>(m, "MeshError", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<Measurement>(m, "Measurement")
      .def_readonly("W", &Measurement::W)
      .def_readonly("W0", &Measurement::W0)
      .def_readonly("ratio", &Measurement::ratio)
      .def_readonly("identity_lhs", &Measurement::identity_lhs)
      .def_readonly("identity_rhs", &Measurement::identity_rhs)
      .def_readonly("identity_residual", &Measurement::identity_residual)
      .def_readonly("grad_energy_D", &Measurement::grad_energy_D)
      .def_readonly("gnorm2", &Measurement::gnorm2)
      .def_readonly("h", &Measurement::h)
      .def_readonly("h_max", &Measurement::h_max)
      .def_readonly("area", &Measurement::area)
      .def_readonly("d0", &Measurement::d0)
      .def_readonly("boundary_W", &Measurement::boundary_W)
      .def_readonly("boundary_W0", &Measurement::boundary_W0)
      .def_property_readonly("net_force_outer", [](const Measurement& x) { return from_point(x.net_force_outer); })
      .def_property_readonly("net_force_cavity", [](const Measurement& x) { return from_point(x.net_force_cavity); })
      .def_readonly("balanced", &Measurement::balanced)
      .def_readonly("lambda_", &Measurement::lambda)
      .def_readonly("datum_id", &Measurement::datum_id)
      .def_readonly("triangles_full", &Measurement::triangles_full)
      .def_readonly("triangles_cavity", &Measurement::triangles_cavity);

  py::class_<ExperimentRecord>(m, "ExperimentRecord")
      .def_readonly("run_id", &ExperimentRecord::run_id)
      .def_readonly("cx", &ExperimentRecord::cx)
      .def_readonly("cy", &ExperimentRecord::cy)
      .def_readonly("radius", &ExperimentRecord::radius)
      .def_readonly("area_frac", &ExperimentRecord::area_frac)
      .def_readonly("d0", &ExperimentRecord::d0)
      .def_readonly("h", &ExperimentRecord::h)
      .def_readonly("W0", &ExperimentRecord::W0)
      .def_readonly("W", &ExperimentRecord::W)
      .def_readonly("ratio", &ExperimentRecord::ratio)
      .def_readonly("grad_energy_D", &ExperimentRecord::grad_energy_D)
      .def_readonly("identity_residual", &ExperimentRecord::identity_residual)
      .def_readonly("gnorm2", &ExperimentRecord::gnorm2)
      .def_readonly("lower", &ExperimentRecord::lower)
      .def_readonly("upper", &ExperimentRecord::upper)
      .def_readonly("wall_ms", &ExperimentRecord::wall_ms);

  py::class_<Calibration>(m, "Calibration")
      .def_readonly("K_hat", &Calibration::K_hat)
      .def_readonly("C_hat", &Calibration::C_hat)
      .def_readonly("K_low", &Calibration::K_low)
      .def_readonly("C_emp", &Calibration::C_emp)
      .def_readonly("min_w0_over_gnorm2", &Calibration::min_w0_over_gnorm2)
      .def_readonly("used", &Calibration::used)
      .def_readonly("excluded", &Calibration::excluded);

  py::class_<SkippedRun>(m, "SkippedRun")
      .def_readonly("run_id", &SkippedRun::run_id)
      .def_readonly("reason", &SkippedRun::reason);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static("defaults", &ExperimentConfig::defaults)
      .def_static("parse", &parse_config, py::arg("json_text"))
      .def_static("load", &load_config, py::arg("path"))
      .def_readwrite("h", &ExperimentConfig::h)
      .def_readwrite("preset", &ExperimentConfig::preset)
      .def_readwrite("balance", &ExperimentConfig::balance)
      .def_readwrite("fractions", &ExperimentConfig::fractions)
      .def_readwrite("d0_values", &ExperimentConfig::d0_values)
      .def_property(
          "positions",
          [](const ExperimentConfig& c) {
            std::vector<std::pair<double, double>> out;
            for (Point p : c.positions) out.push_back(from_point(p));
            return out;
          },
          [](ExperimentConfig& c, const std::vector<std::pair<double, double>>& ps) {
            c.positions.clear();
            for (const auto& p : ps) c.positions.push_back(to_point(p));
          })
      .def_property(
          "sweep",
          [](const ExperimentConfig& c) { return std::make_tuple(c.sweep.r_min, c.sweep.r_max, c.sweep.steps); },
          [](ExperimentConfig& c, const std::tuple<double, double, int>& s) {
            std::tie(c.sweep.r_min, c.sweep.r_max, c.sweep.steps) = s;
          })
      .def("d0_distances", &ExperimentConfig::d0_distances)
      .def("validate", &ExperimentConfig::validate);

  m.def(
      "measure_disk",
      [](std::pair<double, double> center, double radius, const std::string& preset, double h, bool balance,
         int refine) {
        MeasureOptions o;
        o.h = h;
        o.balance = balance;
        o.refine = refine;
        py::gil_scoped_release release;
        return measure(DomainSpec{}, CavityShape::circle(to_point(center), radius), DatumSpec::preset(preset), o);
      },
      py::arg("center"), py::arg("radius"), py::arg("preset") = "tangential-top", py::arg("h") = 1.0 / 64,
      py::arg("balance") = false, py::arg("refine") = 0,
      "Measure a disk cavity in the unit square.");

  m.def(
      "run_grid",
      [](const ExperimentConfig& c, int threads) {
        GridResult r;
        {
          py::gil_scoped_release release;
          r = run_grid(c, threads);
        }
        return py::make_tuple(r.records, r.skipped);
      },
      py::arg("config"), py::arg("threads") = 0, "Returns (records, skipped).");
  m.def(
      "run_sweep",
      [](const ExperimentConfig& c, int threads) {
        py::gil_scoped_release release;
        return run_sweep(c, threads);
      },
      py::arg("config"), py::arg("threads") = 0);

  m.def(
      "calibrate",
      [](std::vector<ExperimentRecord> records, double domain_area) { return calibrate(records, domain_area); },
      py::arg("records"), py::arg("domain_area") = 1.0);
  m.def(
      "calibrate_by_d0",
      [](std::vector<ExperimentRecord> records, std::vector<double> d0s, double domain_area) {
        return calibrate_by_d0(records, d0s, domain_area);
      },
      py::arg("records"), py::arg("d0_values"), py::arg("domain_area") = 1.0);
  m.def(
      "apply_calibration",
      [](std::vector<ExperimentRecord> records, const Calibration& c) {
        apply_calibration(records, c);
        return records;
      },
      py::arg("records"), py::arg("calibration"), "Returns copies with lower/upper filled.");

  m.def("csv_text", &csv_text, py::arg("records"));
  m.def("parse_csv", &parse_csv, py::arg("text"));
  m.def("calibration_json", &calibration_json, py::arg("overall"), py::arg("by_d0"));
}
