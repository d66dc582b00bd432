// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal deterministic SVG charts: line charts with an optional secondary
// axis, labeled scatter plots and stem plots. Coordinates are printed with
// fixed precision so identical inputs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace groklab::svg {

enum class Stroke { solid, dashed, dotted, dash_dot };

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  Stroke stroke = Stroke::solid;
  std::string color = "#1f77b4";
  bool secondary_axis = false;
};

struct LabeledPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* dash(Stroke s) {
  switch (s) {
    case Stroke::solid: return "";
    case Stroke::dashed: return " stroke-dasharray=\"8,4\"";
    case Stroke::dotted: return " stroke-dasharray=\"2,3\"";
    case Stroke::dash_dot: return " stroke-dasharray=\"8,3,2,3\"";
  }
  return "";
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

struct Frame {
  double width = 720, height = 440;
  double left = 70, right = 70, top = 40, bottom = 60;
  double x0() const { return left; }
  double x1() const { return width - right; }
  double y0() const { return height - bottom; }
  double y1() const { return top; }
};

inline std::string header(const Frame& f, const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(f.width) + "\" height=\"" +
                  fmt(f.height) + "\" viewBox=\"0 0 " + fmt(f.width) + " " + fmt(f.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(f.width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  return s;
}

inline std::string axes(const Frame& f, const Range& xr, const Range& yr, const std::string& xlabel,
                        const std::string& ylabel, const Range* y2 = nullptr, const std::string& y2label = "") {
  std::string s;
  s += "<rect x=\"" + fmt(f.x0()) + "\" y=\"" + fmt(f.y1()) + "\" width=\"" + fmt(f.x1() - f.x0()) + "\" height=\"" +
       fmt(f.y0() - f.y1()) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 5.0;
    const double px = xr.map(fx, f.x0(), f.x1());
    s += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(f.y0() + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + tick(fx) + "</text>\n";
    const double fy = yr.lo + (yr.hi - yr.lo) * t / 5.0;
    const double py = yr.map(fy, f.y0(), f.y1());
    s += "<text x=\"" + fmt(f.x0() - 6) + "\" y=\"" + fmt(py + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + tick(fy) + "</text>\n";
    if (y2) {
      const double fy2 = y2->lo + (y2->hi - y2->lo) * t / 5.0;
      s += "<text x=\"" + fmt(f.x1() + 6) + "\" y=\"" + fmt(py + 4) +
           "\" text-anchor=\"start\" font-family=\"sans-serif\" font-size=\"11\">" + tick(fy2) + "</text>\n";
    }
  }
  s += "<text x=\"" + fmt((f.x0() + f.x1()) / 2) + "\" y=\"" + fmt(f.height - 18) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + escape(xlabel) + "</text>\n";
  s += "<text x=\"18\" y=\"" + fmt((f.y0() + f.y1()) / 2) + "\" transform=\"rotate(-90 18 " +
       fmt((f.y0() + f.y1()) / 2) + ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
       escape(ylabel) + "</text>\n";
  if (y2) {
    const double x = f.width - 14;
    s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt((f.y0() + f.y1()) / 2) + "\" transform=\"rotate(90 " + fmt(x) + " " +
         fmt((f.y0() + f.y1()) / 2) + ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         escape(y2label) + "</text>\n";
  }
  return s;
}

}  // namespace detail

/// Line chart. Series flagged secondary_axis are scaled against a right axis.
inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series, const std::string& y2label = "") {
  detail::Frame f;
  detail::Range xr, yr, y2r;
  bool has_secondary = false;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) (s.secondary_axis ? y2r : yr).add(v);
    has_secondary = has_secondary || s.secondary_axis;
  }
  xr.finish();
  yr.finish();
  y2r.finish();
  std::string out = detail::header(f, title);
  out += detail::axes(f, xr, yr, xlabel, ylabel, has_secondary ? &y2r : nullptr, y2label);
  double legend_y = f.y1() + 14;
  for (const auto& s : series) {
    const auto& r = s.secondary_axis ? y2r : yr;
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += detail::fmt(xr.map(s.x[i], f.x0(), f.x1())) + "," + detail::fmt(r.map(s.y[i], f.y0(), f.y1()));
    }
    out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" + detail::dash(s.stroke) +
           " points=\"" + pts + "\"><title>" + detail::escape(s.name) + "</title></polyline>\n";
    out += "<line x1=\"" + detail::fmt(f.x0() + 10) + "\" y1=\"" + detail::fmt(legend_y) + "\" x2=\"" +
           detail::fmt(f.x0() + 40) + "\" y2=\"" + detail::fmt(legend_y) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"" + detail::dash(s.stroke) + "/>\n";
    out += "<text x=\"" + detail::fmt(f.x0() + 46) + "\" y=\"" + detail::fmt(legend_y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::escape(s.name) + "</text>\n";
    legend_y += 15;
  }
  out += "</svg>\n";
  return out;
}

/// Scatter plot with a text label beside every point.
inline std::string scatter(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<LabeledPoint>& points) {
  detail::Frame f;
  f.right = 30;
  detail::Range xr, yr;
  for (const auto& p : points) {
    xr.add(p.x);
    yr.add(p.y);
  }
  xr.finish();
  yr.finish();
  // pad so labels stay inside the frame
  const double px = 0.06 * (xr.hi - xr.lo), py = 0.06 * (yr.hi - yr.lo);
  xr.lo -= px, xr.hi += px, yr.lo -= py, yr.hi += py;
  std::string out = detail::header(f, title);
  out += detail::axes(f, xr, yr, xlabel, ylabel);
  for (const auto& p : points) {
    const double x = xr.map(p.x, f.x0(), f.x1()), y = yr.map(p.y, f.y0(), f.y1());
    out += "<circle cx=\"" + detail::fmt(x) + "\" cy=\"" + detail::fmt(y) + "\" r=\"3\" fill=\"#d62728\"/>\n";
    out += "<text x=\"" + detail::fmt(x + 5) + "\" y=\"" + detail::fmt(y - 5) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::escape(p.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

/// Vertical stems from zero, e.g. a power spectrum or an autocorrelation.
inline std::string stem_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<double>& values) {
  detail::Frame f;
  f.right = 30;
  detail::Range xr, yr;
  for (std::size_t i = 0; i < values.size(); ++i) {
    xr.add(static_cast<double>(i));
    yr.add(values[i]);
  }
  yr.add(0.0);
  xr.finish();
  yr.finish();
  std::string out = detail::header(f, title);
  out += detail::axes(f, xr, yr, xlabel, ylabel);
  const double zero = yr.map(0.0, f.y0(), f.y1());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = xr.map(static_cast<double>(i), f.x0(), f.x1());
    const double y = yr.map(values[i], f.y0(), f.y1());
    out += "<line x1=\"" + detail::fmt(x) + "\" y1=\"" + detail::fmt(zero) + "\" x2=\"" + detail::fmt(x) + "\" y2=\"" +
           detail::fmt(y) + "\" stroke=\"#1f77b4\"/>\n";
    out += "<circle cx=\"" + detail::fmt(x) + "\" cy=\"" + detail::fmt(y) + "\" r=\"2\" fill=\"#1f77b4\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace groklab::svg
