#pragma once

// Hand-written SVG for 2-D trajectories over critical-point markers.
// Read-only over its inputs.

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lss/equilibria.hpp"
#include "lss/errors.hpp"
#include "lss/trajectory.hpp"

namespace lss {

struct PlotSeries {
  const Trajectory* trajectory = nullptr;
  std::string label;
  std::string stroke = "#1f77b4";
  bool dashed = false;
};

struct PlotMarker {
  Eigen::Vector2d z;
  Classification classification;
};

struct PlotSpec {
  double x_min = -1, x_max = 1, y_min = -1, y_max = 1;
  int width = 640, height = 640;
  std::string title;
  std::vector<PlotSeries> series;
  std::vector<PlotMarker> markers;
};

inline const std::vector<std::string>& default_palette() {
  static const std::vector<std::string> p = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
  return p;
}

/// Axis ranges covering all series and markers with a 5% margin.
inline void fit_axes(PlotSpec& spec) {
  double xl = 1e300, xh = -1e300, yl = 1e300, yh = -1e300;
  auto take = [&](double x, double y) {
    xl = std::min(xl, x), xh = std::max(xh, x), yl = std::min(yl, y), yh = std::max(yh, y);
  };
  for (const auto& s : spec.series)
    for (const auto& r : s.trajectory->rows) take(r.z[0], r.z[1]);
  for (const auto& m : spec.markers) take(m.z[0], m.z[1]);
  if (xl > xh) return;
  const double pad = 0.05 * std::max({xh - xl, yh - yl, 1e-3});
  spec.x_min = xl - pad, spec.x_max = xh + pad, spec.y_min = yl - pad, spec.y_max = yh + pad;
}

namespace detail {
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
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
}  // namespace detail

inline void write_svg(std::ostream& out, const PlotSpec& spec) {
  for (const auto& s : spec.series) {
    if (!s.trajectory) throw InvalidInput("plot series without a trajectory");
    if (s.trajectory->dx + s.trajectory->dy != 2) throw InvalidInput("plots are only defined for 2-D games");
  }
  if (!(spec.x_max > spec.x_min) || !(spec.y_max > spec.y_min)) throw InvalidInput("plot axis range is empty");

  const double m = 40.0;
  const double w = spec.width, h = spec.height;
  auto px = [&](double x) { return m + (x - spec.x_min) / (spec.x_max - spec.x_min) * (w - 2 * m); };
  auto py = [&](double y) { return h - m - (y - spec.y_min) / (spec.y_max - spec.y_min) * (h - 2 * m); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << w - 2 * m << "\" height=\"" << h - 2 * m
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  if (!spec.title.empty()) {
    out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << detail::xml_escape(spec.title) << "</text>\n";
  }
  out << "<text x=\"" << m << "\" y=\"" << h - 12 << "\" font-family=\"sans-serif\" font-size=\"11\">x: ["
      << detail::fmt(spec.x_min) << ", " << detail::fmt(spec.x_max) << "]  y: [" << detail::fmt(spec.y_min) << ", "
      << detail::fmt(spec.y_max) << "]</text>\n";

  int legend_row = 0;
  for (const auto& s : spec.series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.stroke << "\" stroke-width=\"1.5\"";
    if (s.dashed) out << " stroke-dasharray=\"6,4\"";
    out << " points=\"";
    // Thin very long paths to at most ~4000 vertices; the endpoints are kept.
    const auto& rows = s.trajectory->rows;
    const std::size_t every = std::max<std::size_t>(1, rows.size() / 4000);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i % every != 0 && i + 1 != rows.size()) continue;
      out << detail::fmt(px(rows[i].z[0])) << ',' << detail::fmt(py(rows[i].z[1])) << ' ';
    }
    out << "\"/>\n";
    const auto& z0 = rows.front().z;
    out << "<circle cx=\"" << detail::fmt(px(z0[0])) << "\" cy=\"" << detail::fmt(py(z0[1]))
        << "\" r=\"4\" fill=\"red\"/>\n";
    if (!s.label.empty()) {
      const double ly = m + 16 + 14 * legend_row++;
      out << "<line x1=\"" << m + 8 << "\" y1=\"" << ly - 4 << "\" x2=\"" << m + 28 << "\" y2=\"" << ly - 4
          << "\" stroke=\"" << s.stroke << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
          << "/>\n";
      out << "<text x=\"" << m + 32 << "\" y=\"" << ly << "\" font-family=\"sans-serif\" font-size=\"11\">"
          << detail::xml_escape(s.label) << "</text>\n";
    }
  }

  for (const auto& mk : spec.markers) {
    const char* glyph = mk.classification == Classification::DNE           ? "x"
                        : mk.classification == Classification::NonNashLASE ? "*"
                                                                           : "o";
    out << "<text x=\"" << detail::fmt(px(mk.z[0])) << "\" y=\"" << detail::fmt(py(mk.z[1]) + 5)
        << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"16\" font-weight=\"bold\">" << glyph
        << "</text>\n";
  }
  out << "</svg>\n";
}

inline std::string to_svg(const PlotSpec& spec) {
  std::ostringstream os;
  write_svg(os, spec);
  return os.str();
}

}  // namespace lss
