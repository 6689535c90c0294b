#include "slicesim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace slicesim::svg {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::abs(v) >= 1e5 || std::abs(v) < 1e-2))
    std::snprintf(buf, sizeof buf, "%.1e", v);
  else
    std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Round step giving about `count` intervals over [lo, hi].
double nice_step(double lo, double hi, int count) {
  const double raw = (hi - lo) / count;
  if (!(raw > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

void y_axis(std::ostringstream& out, double lo, double hi, const std::string& label) {
  const double plot_h = kHeight - kTop - kBottom;
  const double step = nice_step(lo, hi, 5);
  for (double v = std::ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    const double y = kTop + plot_h * (1.0 - (v - lo) / (hi - lo));
    out << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kWidth - kRight) << "\" y1=\"" << num(y) << "\" y2=\""
        << num(y) << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << tick_label(v)
        << "</text>\n";
  }
  out << "<text transform=\"translate(18," << num(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(label) << "</text>\n";
}

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string render(const LinePlot& plot) {
  double x_lo = 0.0, x_hi = 1.0, y_hi = plot.y_max;
  bool any = false;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x_lo = any ? std::min(x_lo, s.x[i]) : s.x[i];
      x_hi = any ? std::max(x_hi, s.x[i]) : s.x[i];
      if (plot.y_max == 0.0) y_hi = std::max(y_hi, s.y[i]);
      any = true;
    }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= plot.y_min) y_hi = plot.y_min + 1.0;
  if (plot.y_max == 0.0) y_hi *= 1.05;

  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + plot_w * (x - x_lo) / (x_hi - x_lo); };
  auto py = [&](double y) { return kTop + plot_h * (1.0 - (y - plot.y_min) / (y_hi - plot.y_min)); };

  std::ostringstream out;
  header(out, plot.title);
  y_axis(out, plot.y_min, y_hi, plot.y_label);
  const double step = nice_step(x_lo, x_hi, 6);
  for (double v = std::ceil(x_lo / step) * step; v <= x_hi + step * 1e-9; v += step)
    out << "<text x=\"" << num(px(v)) << "\" y=\"" << num(kHeight - kBottom + 18) << "\" text-anchor=\"middle\">"
        << tick_label(v) << "</text>\n";
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 18) << "\" text-anchor=\"middle\">"
      << escape(plot.x_label) << "</text>\n"
      << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
      << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string points;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      points += num(px(s.x[i])) + "," + num(py(std::clamp(s.y[i], plot.y_min, y_hi))) + " ";
    }
    if (!points.empty()) points.pop_back();
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    out << "<line x1=\"" << num(kWidth - kRight + 12) << "\" x2=\"" << num(kWidth - kRight + 32) << "\" y1=\""
        << num(ly - 4) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(kWidth - kRight + 38) << "\" y=\"" << num(ly) << "\">" << escape(s.name)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render(const BarChart& chart) {
  double y_hi = chart.y_max;
  if (y_hi == 0.0)
    for (const auto& [name, v] : chart.bars) y_hi = std::max(y_hi, v * 1.05);
  if (!(y_hi > 0.0)) y_hi = 1.0;

  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  std::ostringstream out;
  header(out, chart.title);
  y_axis(out, 0.0, y_hi, chart.y_label);
  const double slot = chart.bars.empty() ? plot_w : plot_w / static_cast<double>(chart.bars.size());
  for (std::size_t i = 0; i < chart.bars.size(); ++i) {
    const auto& [name, v] = chart.bars[i];
    const double h = plot_h * std::clamp(v / y_hi, 0.0, 1.0);
    const double x = kLeft + slot * static_cast<double>(i);
    out << "<rect x=\"" << num(x + slot * 0.15) << "\" y=\"" << num(kTop + plot_h - h) << "\" width=\""
        << num(slot * 0.7) << "\" height=\"" << num(h) << "\" fill=\"" << kColors[i % std::size(kColors)]
        << "\"/>\n"
        << "<text transform=\"translate(" << num(x + slot / 2) << ',' << num(kHeight - kBottom + 14)
        << ") rotate(30)\">" << escape(name) << "</text>\n";
  }
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
      << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
  return out.str();
}

}  // namespace slicesim::svg
