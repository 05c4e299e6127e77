#include <algorithm>
#include <cmath>
#include <cstdio>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cavlab/error.hpp"
#include "cavlab/lab.hpp"

namespace cavlab {

namespace {

constexpr const char* kHeader =
    "run_id,cx,cy,radius,area_frac,d0,h,W0,W,ratio,grad_energy_D,identity_residual,gnorm2,lower,upper,wall_ms";

std::array<double ExperimentRecord::*, 15> numeric_fields() {
  return {&ExperimentRecord::cx,
          &ExperimentRecord::cy,
          &ExperimentRecord::radius,
          &ExperimentRecord::area_frac,
          &ExperimentRecord::d0,
          &ExperimentRecord::h,
          &ExperimentRecord::W0,
          &ExperimentRecord::W,
          &ExperimentRecord::ratio,
          &ExperimentRecord::grad_energy_D,
          &ExperimentRecord::identity_residual,
          &ExperimentRecord::gnorm2,
          &ExperimentRecord::lower,
          &ExperimentRecord::upper,
          &ExperimentRecord::wall_ms};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("write failed for " + path);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string csv_text(const std::vector<ExperimentRecord>& records) {
  std::string s = kHeader;
  s += '\n';
  for (const ExperimentRecord& r : records) {
    if (r.run_id.find_first_of(",\n") != std::string::npos) throw ConfigError("run id contains a separator");
    s += r.run_id;
    for (auto f : numeric_fields()) {
      s += ',';
      s += num(r.*f);
    }
    s += '\n';
  }
  return s;
}

void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  write_file(path, csv_text(records));
}

std::vector<ExperimentRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw ConfigError("unexpected CSV header");
  std::vector<ExperimentRecord> out;
  const auto fields = numeric_fields();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != fields.size() + 1) throw ConfigError("malformed CSV row: " + line);
    ExperimentRecord r;
    r.run_id = cells[0];
    for (std::size_t i = 0; i < fields.size(); ++i) {
      char* end = nullptr;
      r.*fields[i] = std::strtod(cells[i + 1].c_str(), &end);
      if (end == cells[i + 1].c_str() || *end != '\0') throw ConfigError("bad number in CSV: " + cells[i + 1]);
    }
    out.push_back(r);
  }
  return out;
}

std::vector<ExperimentRecord> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void emit_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path) {
  std::string s = "level,h,W,W0,ratio,identity_residual,gnorm2,rel_change_W,rel_change_W0,rel_change_ratio\n";
  for (const ConvergenceRow& r : rows) {
    s += std::to_string(r.level);
    for (double v : {r.h, r.W, r.W0, r.ratio, r.identity_residual, r.gnorm2, r.dW, r.dW0, r.dratio}) {
      s += ',';
      s += num(v);
    }
    s += '\n';
  }
  write_file(path, s);
}

std::string svg_scatter(const std::vector<ExperimentRecord>& records, const std::optional<ScatterOverlay>& overlay) {
  if (records.empty()) throw ConfigError("scatter plot needs at least one record");
  constexpr double W = 640.0;
  constexpr double H = 480.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top = 20.0;
  constexpr double bottom = 50.0;
  double xmax = 0.0;
  double ymax = 0.0;
  for (const ExperimentRecord& r : records) {
    xmax = std::max(xmax, r.ratio);
    ymax = std::max(ymax, r.area_frac);
  }
  xmax = xmax > 0.0 ? 1.1 * xmax : 1.0;
  ymax = ymax > 0.0 ? 1.1 * ymax : 1.0;
  auto sx = [&](double x) { return left + (W - left - right) * x / xmax; };
  auto sy = [&](double y) { return H - bottom - (H - top - bottom) * y / ymax; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<defs><clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right
     << "\" height=\"" << H - top - bottom << "\"/></clipPath></defs>\n";
  os << "<g class=\"axes\" stroke=\"black\"><line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << W - right
     << "\" y2=\"" << sy(0) << "\"/><line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << left << "\" y2=\""
     << top << "\"/></g>\n";
  os << "<g class=\"ticks\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double x = xmax * i / 5.0;
    const double y = ymax * i / 5.0;
    os << "<line x1=\"" << sx(x) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(x) << "\" y2=\"" << sy(0) + 5
       << "\" stroke=\"black\"/><text x=\"" << sx(x) << "\" y=\"" << sy(0) + 18 << "\" text-anchor=\"middle\">"
       << short_num(x) << "</text>\n";
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << left << "\" y2=\"" << sy(y)
       << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">"
       << short_num(y) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\">(W - W0) / W0</text>\n";
  os << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (top + H - bottom) / 2 << ")\">|D| / |Omega|</text>\n";

  if (overlay) {
    const Calibration& c = overlay->calibration;
    const double a = overlay->domain_area;
    auto line = [&](const char* cls, const char* color, auto f) {
      os << "<polyline class=\"" << cls << "\" clip-path=\"url(#plot)\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\" points=\"";
      for (int i = 0; i <= 200; ++i) {
        const double x = xmax * i / 200.0;
        os << sx(x) << ',' << sy(f(x)) << ' ';
      }
      os << "\"/>\n";
    };
    if (std::isfinite(c.K_hat) && c.K_hat > 0.0) {
      line("upper", "#c0392b", [&](double x) { return c.K_hat * x / a; });
    }
    if (std::isfinite(c.K_low) && c.K_low > 0.0) {
      line("sector-lower", "#2471a3", [&](double x) { return c.K_low * x / a; });
    }
    if (std::isfinite(c.C_hat) && c.C_hat > 0.0 && std::isfinite(c.min_w0_over_gnorm2)) {
      line("lower-bound", "#27ae60", [&](double x) { return c.C_hat * c.min_w0_over_gnorm2 * x * x / a; });
    }
  }

  os << "<g class=\"markers\" fill=\"black\">\n";
  for (const ExperimentRecord& r : records) {
    os << "<circle class=\"marker\" cx=\"" << sx(r.ratio) << "\" cy=\"" << sy(r.area_frac) << "\" r=\"3\"><title>"
       << r.run_id << "</title></circle>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

void emit_svg_scatter(const std::vector<ExperimentRecord>& records, const std::string& path,
                      const std::optional<ScatterOverlay>& overlay) {
  write_file(path, svg_scatter(records, overlay));
}

std::string calibration_json(const Calibration& overall, const std::map<double, Calibration>& by_d0) {
  using nlohmann::json;
  auto to_json = [](const Calibration& c) {
    // An empty stratum has no constants at all.
    auto finite = [&c](double v) { return c.used > 0 && std::isfinite(v) ? json(v) : json(nullptr); };
    return json{{"K_hat", finite(c.K_hat)},
                {"C_hat", finite(c.C_hat)},
                {"K_low", finite(c.K_low)},
                {"C_emp", finite(c.C_emp)},
                {"min_W0_over_gnorm2", finite(c.min_w0_over_gnorm2)},
                {"used", c.used},
                {"excluded", c.excluded}};
  };
  json strata = json::array();
  // Largest d0 first, the order in which the lower bound is expected to degrade.
  bool nonincreasing = true;
  double previous = std::numeric_limits<double>::infinity();
  for (auto it = by_d0.rbegin(); it != by_d0.rend(); ++it) {
    json e = to_json(it->second);
    e["d0"] = it->first;
    strata.push_back(e);
    const double c = it->second.used > 0 ? it->second.C_hat : std::numeric_limits<double>::infinity();
    if (c > previous) nonincreasing = false;
    previous = c;
  }
  json root{{"overall", to_json(overall)}, {"by_d0", strata}, {"C_hat_nonincreasing_as_d0_decreases", nonincreasing}};
  return root.dump(2) + "\n";
}

}  // namespace cavlab
