#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kips/harness/csv.hpp"

namespace kips::harness {

// Minimal vector-graphics emitter for the experiment summaries; keeps the
// core pipeline free of plotting dependencies.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height) : width_(width), height_(height) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
          << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    body_ << "<rect width=\"" << width_ << "\" height=\"" << height_ << "\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& color = "#444",
            double stroke = 1.0) {
    body_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
          << "\" stroke=\"" << color << "\" stroke-width=\"" << stroke << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double stroke = 1.6) {
    if (pts.empty()) return;
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << stroke
          << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << x << ',' << y << ' ';
    body_ << "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& color) {
    body_ << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << color
          << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& color) {
    body_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
          << "\" fill=\"" << color << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 11,
            const std::string& anchor = "start") {
    body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
          << "</text>\n";
  }

  void save(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("svg: cannot write " + path);
    out << body_.str() << "</svg>\n";
    if (!out) throw std::runtime_error("svg: write failed for " + path);
  }

  double width() const { return width_; }
  double height() const { return height_; }

 private:
  double width_, height_;
  std::ostringstream body_;
};

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;  // data coordinates
};

// Line/scatter chart with linear or log10 axes.
inline void write_xy_plot(const std::string& path, const std::vector<PlotSeries>& series,
                          const std::string& x_label, const std::string& y_label,
                          bool log_x = false, bool log_y = false, bool draw_lines = true,
                          bool draw_diagonal = false) {
  SvgCanvas canvas(640, 440);
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  const double pw = canvas.width() - ml - mr;
  const double ph = canvas.height() - mt - mb;

  auto tx = [log_x](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [log_y](double v) { return log_y ? std::log10(v) : v; };

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, tx(x));
      xmax = std::max(xmax, tx(x));
      ymin = std::min(ymin, ty(y));
      ymax = std::max(ymax, ty(y));
    }
  }
  if (!(xmin < xmax)) { xmin -= 0.5; xmax += 0.5; }
  if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.08 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return mt + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };

  canvas.line(ml, mt + ph, ml + pw, mt + ph);
  canvas.line(ml, mt, ml, mt + ph);
  canvas.text(ml + pw / 2, canvas.height() - 12, x_label, 12, "middle");
  canvas.text(14, mt + 10, y_label, 12);

  if (draw_diagonal) {
    const double lo = std::max(xmin, ymin), hi = std::min(xmax, ymax);
    canvas.line(ml + (lo - xmin) / (xmax - xmin) * pw, mt + ph - (lo - ymin) / (ymax - ymin) * ph,
                ml + (hi - xmin) / (xmax - xmin) * pw, mt + ph - (hi - ymin) / (ymax - ymin) * ph,
                "#e08030", 1.0);
  }

  double legend_y = mt + 14;
  for (const auto& s : series) {
    if (draw_lines) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& [x, y] : s.points) pts.emplace_back(px(x), py(y));
      canvas.polyline(pts, s.color);
    }
    for (const auto& [x, y] : s.points) canvas.circle(px(x), py(y), 2.4, s.color);
    canvas.rect(ml + pw - 150, legend_y - 8, 10, 10, s.color);
    canvas.text(ml + pw - 135, legend_y + 1, s.label);
    legend_y += 16;
  }
  canvas.save(path);
}

// Grouped bar chart of category means with +/- one-sd whiskers.
struct BarGroup {
  std::string label;
  double mean = 0.0;
  double sd = 0.0;
};

inline void write_bar_plot(const std::string& path, const std::vector<BarGroup>& bars,
                           const std::string& y_label) {
  SvgCanvas canvas(640, 440);
  const double ml = 70, mr = 20, mt = 20, mb = 70;
  const double pw = canvas.width() - ml - mr;
  const double ph = canvas.height() - mt - mb;
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.mean - b.sd);
    hi = std::max(hi, b.mean + b.sd);
  }
  const double pad = 0.1 * std::max(1e-12, hi - lo);
  lo -= pad; hi += pad;
  auto py = [&](double v) { return mt + ph - (v - lo) / (hi - lo) * ph; };

  canvas.line(ml, py(0.0), ml + pw, py(0.0), "#888");
  canvas.line(ml, mt, ml, mt + ph);
  canvas.text(14, mt + 10, y_label, 12);

  const double slot = pw / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double cx = ml + slot * (static_cast<double>(i) + 0.5);
    const double w = slot * 0.5;
    const double y0 = py(0.0), y1 = py(bars[i].mean);
    canvas.rect(cx - w / 2, std::min(y0, y1), w, std::max(1.0, std::abs(y1 - y0)), "#9aa7b8");
    canvas.line(cx, py(bars[i].mean - bars[i].sd), cx, py(bars[i].mean + bars[i].sd), "#222",
                1.4);
    canvas.text(cx, mt + ph + 16, bars[i].label, 11, "middle");
  }
  canvas.save(path);
}

}  // namespace kips::harness
