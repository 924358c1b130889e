#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace kfluct::out {

inline constexpr int csv_schema_version = 1;

// Shortest round-trip safe text: 17 significant digits.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Column {
  std::string name;
  std::vector<double> values;
};

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << body;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline std::string csv_text(const std::vector<Column>& cols) {
  if (cols.empty()) throw std::invalid_argument("csv: no columns");
  const std::size_t rows = cols.front().values.size();
  for (const Column& c : cols)
    if (c.values.size() != rows) throw std::invalid_argument("csv: column '" + c.name + "' has a different length");
  std::string s;
  for (std::size_t j = 0; j < cols.size(); ++j) s += (j ? "," : "") + cols[j].name;
  s += "\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (j) s += ",";
      s += num(cols[j].values[i]);
    }
    s += "\n";
  }
  return s;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<Column>& cols) {
  write_text(path, csv_text(cols));
}

// nlohmann prints doubles in shortest round-trip form, which is deterministic.
inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

struct Series {
  std::string name;
  std::vector<double> x, y;
};

// Polyline plot with axes, tick labels and a legend. The polylines are a view of the data:
// each point is the affine image of an (x, y) pair.
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double W = 720, H = 440, left = 70, right = 170, top = 40, bottom = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x1 >= x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  auto f = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4f", v);
    return std::string(b);
  };
  auto lab = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return std::string(b);
  };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(W) + "\" height=\"" + f(H) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + f(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
  s += "<rect x=\"" + f(left) + "\" y=\"" + f(top) + "\" width=\"" + f(pw) + "\" height=\"" + f(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    s += "<line x1=\"" + f(px(xv)) + "\" y1=\"" + f(top + ph) + "\" x2=\"" + f(px(xv)) + "\" y2=\"" +
         f(top + ph + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + f(px(xv)) + "\" y=\"" + f(top + ph + 18) + "\" text-anchor=\"middle\">" + lab(xv) + "</text>\n";
    s += "<line x1=\"" + f(left - 5) + "\" y1=\"" + f(py(yv)) + "\" x2=\"" + f(left) + "\" y2=\"" + f(py(yv)) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + f(left - 8) + "\" y=\"" + f(py(yv) + 4) + "\" text-anchor=\"end\">" + lab(yv) + "</text>\n";
  }
  s += "<text x=\"" + f(left + pw / 2) + "\" y=\"" + f(H - 12) + "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  s += "<text x=\"16\" y=\"" + f(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       f(top + ph / 2) + ")\">" + ylabel + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* col = palette[k % 10];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.3\" points=\"";
    const Series& se = series[k];
    for (std::size_t i = 0; i < se.x.size(); ++i) {
      if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
      s += f(px(se.x[i])) + "," + f(py(se.y[i])) + " ";
    }
    s += "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    s += "<line x1=\"" + f(W - right + 12) + "\" y1=\"" + f(ly) + "\" x2=\"" + f(W - right + 36) + "\" y2=\"" +
         f(ly) + "\" stroke=\"" + col + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + f(W - right + 42) + "\" y=\"" + f(ly + 4) + "\">" + se.name + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace kfluct::out
