#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rkpr/flow.hpp"

namespace rkpr {

namespace detail {

inline std::string fmt_svg(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

}  // namespace detail

/// Arrow plot of the drift field (s horizontal, r^2 vertical), optionally
/// with an integral curve overlaid. Output bytes depend only on the inputs.
inline std::string vector_field_svg(const std::vector<FieldPoint>& field,
                                    const FlowPath* curve = nullptr) {
  const int width = 720, height = 720, margin = 60;

  double s_lo = field.front().y.s, s_hi = s_lo;
  double r2_lo = field.front().y.r2, r2_hi = r2_lo;
  for (const FieldPoint& p : field) {
    s_lo = std::min(s_lo, p.y.s);
    s_hi = std::max(s_hi, p.y.s);
    r2_lo = std::min(r2_lo, p.y.r2);
    r2_hi = std::max(r2_hi, p.y.r2);
  }
  if (s_hi == s_lo) { s_lo -= 0.5; s_hi += 0.5; }
  if (r2_hi == r2_lo) { r2_lo -= 0.5; r2_hi += 0.5; }

  const auto sx = [&](double s) {
    return margin + (s - s_lo) / (s_hi - s_lo) * (width - 2.0 * margin);
  };
  const auto sy = [&](double r2) {
    return height - margin - (r2 - r2_lo) / (r2_hi - r2_lo) * (height - 2.0 * margin);
  };

  double vmax = 0.0;
  for (const FieldPoint& p : field) vmax = std::max(vmax, std::hypot(p.v.ds, p.v.dr2));
  if (vmax == 0.0) vmax = 1.0;
  const double arrow_px = 0.045 * (width - 2.0 * margin);

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  out += "<defs><marker id=\"tip\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" "
         "orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"#444444\"/></marker></defs>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes with a few tick labels.
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + detail::fmt_svg(margin) + "\" y1=\"" + detail::fmt_svg(height - margin) +
         "\" x2=\"" + detail::fmt_svg(width - margin) + "\" y2=\"" + detail::fmt_svg(height - margin) + "\"/>\n";
  out += "<line x1=\"" + detail::fmt_svg(margin) + "\" y1=\"" + detail::fmt_svg(height - margin) +
         "\" x2=\"" + detail::fmt_svg(margin) + "\" y2=\"" + detail::fmt_svg(margin) + "\"/>\n";
  out += "</g>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"13\" fill=\"black\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / 4.0;
    const double r2 = r2_lo + (r2_hi - r2_lo) * i / 4.0;
    char label[32];
    std::snprintf(label, sizeof(label), "%.3g", s);
    out += "<text x=\"" + detail::fmt_svg(sx(s) - 10) + "\" y=\"" +
           detail::fmt_svg(height - margin + 22) + "\">" + label + "</text>\n";
    std::snprintf(label, sizeof(label), "%.3g", r2);
    out += "<text x=\"" + detail::fmt_svg(margin - 42) + "\" y=\"" + detail::fmt_svg(sy(r2) + 4) +
           "\">" + label + "</text>\n";
  }
  out += "<text x=\"" + detail::fmt_svg(width / 2.0 - 4) + "\" y=\"" +
         detail::fmt_svg(height - margin + 44) + "\">s</text>\n";
  out += "<text x=\"" + detail::fmt_svg(margin - 46) + "\" y=\"" + detail::fmt_svg(margin - 16) +
         "\">r^2</text>\n";
  out += "</g>\n";

  out += "<g stroke=\"#444444\" stroke-width=\"1.1\">\n";
  for (const FieldPoint& p : field) {
    const double mag = std::hypot(p.v.ds, p.v.dr2);
    if (mag == 0.0) {
      out += "<circle cx=\"" + detail::fmt_svg(sx(p.y.s)) + "\" cy=\"" + detail::fmt_svg(sy(p.y.r2)) +
             "\" r=\"1.6\" fill=\"#444444\" stroke=\"none\"/>\n";
      continue;
    }
    const double len = arrow_px * (0.25 + 0.75 * mag / vmax);
    const double x0 = sx(p.y.s), y0 = sy(p.y.r2);
    const double x1 = x0 + len * (p.v.ds / mag);
    const double y1 = y0 - len * (p.v.dr2 / mag);
    out += "<line x1=\"" + detail::fmt_svg(x0) + "\" y1=\"" + detail::fmt_svg(y0) + "\" x2=\"" +
           detail::fmt_svg(x1) + "\" y2=\"" + detail::fmt_svg(y1) + "\" marker-end=\"url(#tip)\"/>\n";
  }
  out += "</g>\n";

  if (curve && !curve->states.empty()) {
    out += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    const size_t stride = std::max<size_t>(1, curve->states.size() / 1500);
    for (size_t i = 0; i < curve->states.size(); i += stride) {
      const StateY& y = curve->states[i];
      if (y.s < s_lo || y.s > s_hi || y.r2 < r2_lo || y.r2 > r2_hi) continue;
      out += detail::fmt_svg(sx(y.s)) + "," + detail::fmt_svg(sy(y.r2)) + " ";
    }
    out += "\"/>\n";
  }

  out += "</svg>\n";
  return out;
}

}  // namespace rkpr
