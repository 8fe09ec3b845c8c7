#pragma once

// Minimal line-chart writer for force trajectories. Output is plain SVG with
// fixed-precision coordinates so identical inputs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "drillforce/error.hpp"

namespace drillforce::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotOptions {
  std::string title = "Tip force";
  std::string x_label = "time [s]";
  std::string y_label = "force [N]";
  int width = 900;
  int height = 420;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// 1-2-5 tick spacing giving roughly `target` intervals over [lo, hi].
inline double nice_step(double lo, double hi, int target = 6) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace detail

/// Renders the series as an overlaid line chart. Throws DataError when there
/// is nothing to draw.
inline std::string line_chart(const std::vector<Series>& series, const PlotOptions& opt = {}) {
  using detail::fmt;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  std::size_t points = 0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DataError("plot: series '" + s.label + "' has mismatched x/y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
      ++points;
    }
  }
  if (points == 0) throw DataError("plot: empty trajectory, nothing to draw");
  if (x1 <= x0) x1 = x0 + 1.0;
  y0 = std::min(y0, 0.0);
  if (y1 <= y0) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y1 += pad;
  if (y0 < 0.0) y0 -= pad;

  const double left = 70, right = 150, top = 40, bottom = 55;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
         std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::escape(opt.title) + "</text>\n";

  // grid and ticks
  const double xs = detail::nice_step(x0, x1), ys = detail::nice_step(y0, y1);
  for (double v = std::ceil(x0 / xs) * xs; v <= x1 + 1e-9 * xs; v += xs) {
    const double X = px(v);
    out += "<line x1=\"" + fmt("%.2f", X) + "\" y1=\"" + fmt("%.2f", top) + "\" x2=\"" + fmt("%.2f", X) + "\" y2=\"" +
           fmt("%.2f", top + ph) + "\" stroke=\"#e0e0e0\"/>\n";
    out += "<text x=\"" + fmt("%.2f", X) + "\" y=\"" + fmt("%.2f", top + ph + 16) + "\" text-anchor=\"middle\">" +
           fmt("%g", std::abs(v) < 1e-12 * xs ? 0.0 : v) + "</text>\n";
  }
  for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-9 * ys; v += ys) {
    const double Y = py(v);
    out += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", Y) + "\" x2=\"" + fmt("%.2f", left + pw) +
           "\" y2=\"" + fmt("%.2f", Y) + "\" stroke=\"#e0e0e0\"/>\n";
    out += "<text x=\"" + fmt("%.2f", left - 6) + "\" y=\"" + fmt("%.2f", Y + 4) + "\" text-anchor=\"end\">" +
           fmt("%g", std::abs(v) < 1e-12 * ys ? 0.0 : v) + "</text>\n";
  }
  out += "<rect x=\"" + fmt("%.2f", left) + "\" y=\"" + fmt("%.2f", top) + "\" width=\"" + fmt("%.2f", pw) +
         "\" height=\"" + fmt("%.2f", ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", opt.height - 12.0) +
         "\" text-anchor=\"middle\">" + detail::escape(opt.x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + fmt("%.1f", top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(opt.y_label) + "</text>\n";

  // data
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.2\"";
    if (s.dashed) out += " stroke-dasharray=\"5,3\"";
    out += " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!first) out += ' ';
      out += fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.y[i]));
      first = false;
    }
    out += "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    out += "<line x1=\"" + fmt("%.1f", left + pw + 10) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" +
           fmt("%.1f", left + pw + 34) + "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
    out += "<text x=\"" + fmt("%.1f", left + pw + 40) + "\" y=\"" + fmt("%.1f", ly + 4) + "\">" +
           detail::escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace drillforce::svg
