// Minimal static SVG charts for the sweep outputs.
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace slicesim::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct LinePlot {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  double y_min = 0.0;
  double y_max = 0.0;  // 0 fits the data
};

struct BarChart {
  std::string title, y_label;
  std::vector<std::pair<std::string, double>> bars;
  double y_max = 0.0;  // 0 fits the data
};

std::string render(const LinePlot& plot);
std::string render(const BarChart& chart);

/// Escapes &, <, > and quotes for text and attribute content.
std::string escape(const std::string& text);

}  // namespace slicesim::svg
