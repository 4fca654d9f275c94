#ifndef ESORL_SVG_HPP_
#define ESORL_SVG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace esorl {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f6fb2";
};

namespace detail {

inline std::string fmtc(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline void plot_bounds(const std::vector<PlotSeries>& series,
                        const std::vector<double>& hlines, double& x0,
                        double& x1, double& y0, double& y1) {
  x0 = y0 = std::numeric_limits<double>::infinity();
  x1 = y1 = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    for (double v : s.x) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
    for (double v : s.y) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
  }
  for (double v : hlines) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) { y0 -= 1.0; y1 += 1.0; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
}

}  // namespace detail

// Standalone line plot; byte-identical output for identical inputs.
inline void write_plot_svg(const std::string& path, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotSeries>& series,
                           const std::vector<double>& hlines = {}) {
  if (series.empty()) throw std::invalid_argument("write_plot_svg: no series");
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("write_plot_svg: series length mismatch");
    }
    if (s.x.empty()) throw std::invalid_argument("write_plot_svg: empty series");
  }
  const double W = 860, H = 520, ml = 72, mr = 24, mt = 42, mb = 52;
  double x0, x1, y0, y1;
  detail::plot_bounds(series, hlines, x0, x1, y0, y1);
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_plot_svg: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"15\" text-anchor=\"middle\">" << title << "</text>\n";

  // Frame and ticks.
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0;
    const double yv = y0 + (y1 - y0) * i / 5.0;
    out << "<line x1=\"" << detail::fmtc(px(xv)) << "\" y1=\"" << H - mb
        << "\" x2=\"" << detail::fmtc(px(xv)) << "\" y2=\"" << H - mb + 5
        << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << detail::fmtc(px(xv)) << "\" y=\"" << H - mb + 18
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">" << detail::fmtc(xv) << "</text>\n";
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::fmtc(py(yv))
        << "\" x2=\"" << ml << "\" y2=\"" << detail::fmtc(py(yv))
        << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << detail::fmtc(py(yv) + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"end\">" << detail::fmtc(yv) << "</text>\n";
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 14
      << "\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\">" << xlabel << "</text>\n";
  out << "<text x=\"18\" y=\"" << H / 2
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 " << H / 2 << ")\">" << ylabel << "</text>\n";

  for (double hv : hlines) {
    out << "<line x1=\"" << ml << "\" y1=\"" << detail::fmtc(py(hv)) << "\" x2=\""
        << W - mr << "\" y2=\"" << detail::fmtc(py(hv))
        << "\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>\n";
  }

  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.4\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (i) out << " ";
      out << detail::fmtc(px(s.x[i])) << "," << detail::fmtc(py(s.y[i]));
    }
    out << "\"/>\n";
  }

  // Legend, top-right inside the frame.
  double ly = mt + 16;
  for (const auto& s : series) {
    out << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << W - mr - 126 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - mr - 120 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
        << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write_plot_svg: write failed " + path);
}

}  // namespace esorl

#endif  // ESORL_SVG_HPP_
