#include "plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <vector>

#include "common.hpp"

namespace fpo {

namespace {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<double> moving_average(const std::vector<double>& y, int window) {
  if (window <= 1) return y;
  std::vector<double> out(y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    acc += y[i];
    const std::size_t w = static_cast<std::size_t>(window);
    if (i >= w) acc -= y[i - w];
    const std::size_t n = std::min(i + 1, w);
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

struct Panel {
  double px, py, pw, ph;  // pixel rect
  double x0, x1, y0, y1;  // data ranges

  double xc(double x) const {
    return px + (x - x0) / (x1 - x0) * pw;
  }
  double yc(double y) const {
    return py + ph - (y - y0) / (y1 - y0) * ph;
  }
};

void draw_series(std::string& svg, const Panel& p, const Series& s,
                 const std::vector<double>& ys, const std::string& color,
                 double width) {
  if (s.x.empty()) return;
  if (s.x.size() == 1) {
    svg += "<circle cx=\"" + num(p.xc(s.x[0])) + "\" cy=\"" +
           num(p.yc(ys[0])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    return;
  }
  svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
         num(width) + "\" points=\"";
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (i) svg += ' ';
    svg += num(p.xc(s.x[i])) + "," + num(p.yc(ys[i]));
  }
  svg += "\"/>\n";
}

void draw_panel(std::string& svg, Panel& p, const Series& s, int smooth,
                const std::string& title, bool unit_range) {
  svg += "<rect x=\"" + num(p.px) + "\" y=\"" + num(p.py) + "\" width=\"" +
         num(p.pw) + "\" height=\"" + num(p.ph) +
         "\" fill=\"#fafafa\" stroke=\"#888\"/>\n";
  svg += "<text x=\"" + num(p.px) + "\" y=\"" + num(p.py - 8) +
         "\" font-family=\"sans-serif\" font-size=\"13\">" + title +
         "</text>\n";
  if (s.x.empty()) {
    svg += "<text x=\"" + num(p.px + p.pw / 2 - 30) + "\" y=\"" +
           num(p.py + p.ph / 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#666\">no "
           "data</text>\n";
    return;
  }
  p.x0 = *std::min_element(s.x.begin(), s.x.end());
  p.x1 = *std::max_element(s.x.begin(), s.x.end());
  if (p.x1 <= p.x0) {
    p.x0 -= 1.0;
    p.x1 += 1.0;
  }
  if (unit_range) {
    p.y0 = -0.02;
    p.y1 = 1.02;
  } else {
    p.y0 = *std::min_element(s.y.begin(), s.y.end());
    p.y1 = *std::max_element(s.y.begin(), s.y.end());
    const double pad = std::max(0.5, 0.05 * (p.y1 - p.y0));
    p.y0 -= pad;
    p.y1 += pad;
  }
  const auto smoothed = moving_average(s.y, smooth);
  draw_series(svg, p, s, s.y, "#b0c4de", 1.0);
  draw_series(svg, p, s, smoothed, "#1f4e9c", 2.0);
  // Axis extent labels.
  svg += "<text x=\"" + num(p.px) + "\" y=\"" + num(p.py + p.ph + 14) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + num(p.x0) +
         "</text>\n";
  svg += "<text x=\"" + num(p.px + p.pw - 40) + "\" y=\"" +
         num(p.py + p.ph + 14) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + num(p.x1) +
         "</text>\n";
  svg += "<text x=\"" + num(p.px - 38) + "\" y=\"" + num(p.py + p.ph) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + num(p.y0) +
         "</text>\n";
  svg += "<text x=\"" + num(p.px - 38) + "\" y=\"" + num(p.py + 10) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + num(p.y1) +
         "</text>\n";
}

}  // namespace

void write_curve_svg(const RunMetrics& m, const std::string& path,
                     int smooth_window) {
  if (smooth_window < 1) fail_arg("plot: smooth window must be >= 1");
  Series success;
  Series ret;
  for (const auto& e : m.evals) {
    success.x.push_back(static_cast<double>(e.env_ticks));
    success.y.push_back(e.success_rate);
    ret.x.push_back(static_cast<double>(e.env_ticks));
    ret.y.push_back(e.mean_return);
  }

  std::string svg;
  svg +=
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" "
      "height=\"560\" viewBox=\"0 0 860 560\">\n";
  svg += "<rect width=\"860\" height=\"560\" fill=\"white\"/>\n";
  svg += "<text x=\"50\" y=\"22\" font-family=\"sans-serif\" "
         "font-size=\"15\">run " + hex64(m.config_hash) +
         " (env ticks on x)</text>\n";
  Panel top{50, 50, 760, 200, 0, 1, 0, 1};
  draw_panel(svg, top, success, smooth_window, "deterministic eval success rate",
             true);
  Panel bottom{50, 310, 760, 200, 0, 1, 0, 1};
  draw_panel(svg, bottom, ret, smooth_window, "mean eval return", false);
  svg += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write plot '" + path + "'");
  out << svg;
  if (!out) fail("write failed for plot '" + path + "'");
}

}  // namespace fpo
