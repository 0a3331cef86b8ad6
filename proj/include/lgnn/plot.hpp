#pragma once

// Static SVG line plots with optional shaded bands.

#include "lgnn/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace lgnn {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> lo, hi;  // optional band, same length as x
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_y = false;
  double log_floor = 1e-12;  // log axes clamp values below this
};

namespace detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
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

}  // namespace detail

inline std::string svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  auto ty = [&](double y) { return spec.log_y ? std::log10(std::max(y, spec.log_floor)) : y; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ValidationError("plot: x and y lengths differ");
    const bool band = !s.lo.empty();
    if (band && (s.lo.size() != s.x.size() || s.hi.size() != s.x.size()))
      throw ValidationError("plot: band lengths differ from x");
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      for (double v : {s.y[k], band ? s.lo[k] : s.y[k], band ? s.hi[k] : s.y[k]}) {
        if (!std::isfinite(v)) continue;
        y0 = std::min(y0, ty(v));
        y1 = std::max(y1, ty(v));
      }
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                    "font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + detail::escape(spec.title) + "</text>\n";
  out += "<rect x=\"" + detail::num(L) + "\" y=\"" + detail::num(T) + "\" width=\"" + detail::num(W - L - R) +
         "\" height=\"" + detail::num(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double sx = px(fx), sy = H - B - (fy - y0) / (y1 - y0) * (H - T - B);
    out += "<text x=\"" + detail::num(sx) + "\" y=\"" + detail::num(H - B + 16) +
           "\" text-anchor=\"middle\">" + detail::tick(fx) + "</text>\n";
    out += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(sy + 4) + "\" text-anchor=\"end\">" +
           detail::tick(spec.log_y ? std::pow(10.0, fy) : fy) + "</text>\n";
  }
  out += "<text x=\"320\" y=\"" + detail::num(H - 12) + "\" text-anchor=\"middle\">" + detail::escape(spec.xlabel) + "</text>\n";
  out += "<text x=\"16\" y=\"" + detail::num(H / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::num(H / 2) + ")\">" + detail::escape(spec.ylabel) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = colors[si % 6];
    if (!s.lo.empty()) {
      std::string pts;
      for (std::size_t k = 0; k < s.x.size(); ++k) pts += detail::num(px(s.x[k])) + "," + detail::num(py(s.hi[k])) + " ";
      for (std::size_t k = s.x.size(); k-- > 0;) pts += detail::num(px(s.x[k])) + "," + detail::num(py(s.lo[k])) + " ";
      out += "<polygon points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (std::isfinite(s.y[k])) pts += detail::num(px(s.x[k])) + "," + detail::num(py(s.y[k])) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    const double ly = T + 16 + 16 * static_cast<double>(si);
    out += "<line x1=\"" + detail::num(W - R - 150) + "\" y1=\"" + detail::num(ly - 4) + "\" x2=\"" +
           detail::num(W - R - 130) + "\" y2=\"" + detail::num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::num(W - R - 125) + "\" y=\"" + detail::num(ly) + "\">" + detail::escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace lgnn
