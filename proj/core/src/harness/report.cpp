#include "lope/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lope/dataset_io.hpp"
#include "lope/error.hpp"

namespace lope {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::nan("");
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double metric_of(const MetricRow& r, SweepMetric m) {
  switch (m) {
    case SweepMetric::kMse: return r.mse;
    case SweepMetric::kSquaredBias: return r.squared_bias;
    case SweepMetric::kVariance: return r.variance;
  }
  return 0.0;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void write_sweep_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  auto out = open_out(path);
  out << "estimator,param,mse,bias2,var,R\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << format_double(r.parameter_value) << ',' << format_double(r.mse) << ','
        << format_double(r.squared_bias) << ',' << format_double(r.variance) << ',' << r.n_replications << '\n';
  }
}

std::vector<MetricRow> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "estimator,param,mse,bias2,var,R") {
    throw ValidationError(path.string() + " does not start with the sweep CSV header");
  }
  std::vector<MetricRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 6) throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    MetricRow r;
    r.estimator = cells[0];
    r.parameter_value = parse_double(cells[1]);
    r.mse = parse_double(cells[2]);
    r.squared_bias = parse_double(cells[3]);
    r.variance = parse_double(cells[4]);
    r.n_replications = static_cast<std::size_t>(parse_double(cells[5]));
    rows.push_back(r);
  }
  return rows;
}

void write_selection_csv(const std::filesystem::path& path, const SelectionReport& report) {
  auto out = open_out(path);
  out << "estimator,param,accuracy,R\n";
  for (const auto& r : report.rows) {
    out << r.estimator << ',' << format_double(r.parameter_value) << ',' << format_double(r.accuracy) << ','
        << r.n_replications << '\n';
  }
}

void write_opl_csv(const std::filesystem::path& path, const OplReport& report) {
  auto out = open_out(path);
  out << "learner,param,mean_value,relative_value,R\n";
  for (const auto& r : report.rows) {
    out << r.learner << ',' << format_double(r.parameter_value) << ',' << format_double(r.mean_value) << ','
        << format_double(r.relative_value) << ',' << r.n_replications << '\n';
  }
}

void write_theorem_csv(const std::filesystem::path& path, const TheoremSuiteReport& report) {
  auto out = open_out(path);
  out << "check,value,tolerance,passed,informational\n";
  for (const auto& c : report.checks) {
    out << c.name << ',' << format_double(c.value) << ',' << format_double(c.tolerance) << ','
        << (c.passed ? 1 : 0) << ',' << (c.informational ? 1 : 0) << '\n';
  }
}

std::string to_string(SweepMetric metric) {
  switch (metric) {
    case SweepMetric::kMse: return "mse";
    case SweepMetric::kSquaredBias: return "bias2";
    case SweepMetric::kVariance: return "var";
  }
  return "?";
}

std::string render_sweep_svg(const std::vector<MetricRow>& rows, SweepMetric metric, bool log_y) {
  const double W = 640, H = 420, left = 70, right = 140, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;

  std::vector<std::string> names;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& r : rows) {
    if (!series.count(r.estimator)) names.push_back(r.estimator);
    auto& pts = series[r.estimator];
    const double y = metric_of(r, metric);
    if (!std::isfinite(y) || !std::isfinite(r.parameter_value)) continue;
    pts.emplace_back(r.parameter_value, y);
    xmin = std::min(xmin, r.parameter_value);
    xmax = std::max(xmax, r.parameter_value);
    if (!log_y || y > 0.0) {
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (!std::isfinite(ymin)) ymin = log_y ? 1e-3 : 0.0, ymax = 1.0;
  // Non-positive values sit on the floor of a log axis.
  const double floor = log_y ? ymin / 10.0 : ymin;
  auto ty = [&](double y) { return log_y ? std::log10(std::max(y, floor)) : y; };
  double lo = ty(floor), hi = ty(ymax);
  if (log_y) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  }
  if (hi == lo) lo -= 0.5, hi += 0.5;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - lo) / (hi - lo)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << to_string(metric) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // y ticks: decades on a log axis, five steps otherwise.
  std::vector<double> yt;
  if (log_y) {
    for (double e = lo; e <= hi + 1e-9; e += 1.0) yt.push_back(std::pow(10.0, e));
  } else {
    for (int i = 0; i <= 4; ++i) yt.push_back(lo + (hi - lo) * i / 4.0);
  }
  for (const double y : yt) {
    const double v = log_y ? std::log10(y) : y;
    const double yy = top + (1.0 - (v - lo) / (hi - lo)) * ph;
    svg << "<line x1=\"" << left << "\" y1=\"" << fixed(yy) << "\" x2=\"" << left + pw << "\" y2=\"" << fixed(yy)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fixed(yy + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << tick_label(y) << "</text>\n";
  }
  std::vector<double> xt;
  for (const auto& r : rows) {
    if (std::isfinite(r.parameter_value) && std::find(xt.begin(), xt.end(), r.parameter_value) == xt.end()) {
      xt.push_back(r.parameter_value);
    }
  }
  std::sort(xt.begin(), xt.end());
  for (const double x : xt) {
    svg << "<text x=\"" << fixed(px(x)) << "\" y=\"" << fixed(top + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(x) << "</text>\n";
  }
  svg << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(H - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">param</text>\n";

  for (std::size_t k = 0; k < names.size(); ++k) {
    auto pts = series[names[k]];
    std::sort(pts.begin(), pts.end());
    const char* color = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
    if (!pts.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        svg << (i ? " " : "") << fixed(px(pts[i].first)) << ',' << fixed(py(pts[i].second));
      }
      svg << "\"/>\n";
      for (const auto& [x, y] : pts) {
        svg << "<circle cx=\"" << fixed(px(x)) << "\" cy=\"" << fixed(py(y)) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
      }
    }
    const double ly = top + 14 + 18 * static_cast<double>(k);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << fixed(ly) << "\" x2=\"" << left + pw + 32 << "\" y2=\""
        << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 38 << "\" y=\"" << fixed(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << names[k] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> write_sweep_svgs(const std::filesystem::path& dir, const std::string& stem,
                                                    const std::vector<MetricRow>& rows, bool log_y) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::vector<std::filesystem::path> out;
  for (const auto m : {SweepMetric::kMse, SweepMetric::kSquaredBias, SweepMetric::kVariance}) {
    const auto path = dir / (stem + "_" + to_string(m) + ".svg");
    auto f = open_out(path);
    f << render_sweep_svg(rows, m, log_y);
    out.push_back(path);
  }
  return out;
}

}  // namespace lope
