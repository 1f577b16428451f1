#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nrdq::harness {

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Point cloud, e.g. one feature against PSNR.
std::string svg_scatter(const std::vector<std::pair<double, double>>& points, const Axes& axes);

/// Vertical bars with optional error whiskers (std).
struct Bar {
  std::string label;
  double value = 0.0;
  double error = 0.0;
};
std::string svg_bars(const std::vector<Bar>& bars, const Axes& axes);

/// Polyline through (x, y) with markers, e.g. θ per tuner iteration.
std::string svg_line(const std::vector<std::pair<double, double>>& points, const Axes& axes);

}  // namespace nrdq::harness
