#include "nrdq/harness/plot.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nrdq/image.hpp"

namespace nrdq::harness {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

struct Range {
  double lo, hi;
  double span() const { return hi - lo; }
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double d = std::max(1.0, std::abs(lo) * 0.1);
    return {lo - d, hi + d};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(Range x, Range y, const Axes& axes) : x_(x), y_(y) {
    fmt::format_to(sink(),
                   "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
                   "font-family=\"sans-serif\" font-size=\"12\">\n",
                   kWidth, kHeight);
    fmt::format_to(sink(), "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    fmt::format_to(sink(), "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                   kWidth / 2, escape(axes.title));
    fmt::format_to(sink(), "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                   kLeft + plot_w() / 2, kHeight - 15, escape(axes.x_label));
    fmt::format_to(sink(),
                   "<text transform=\"translate(18,{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                   kTop + plot_h() / 2, escape(axes.y_label));
    fmt::format_to(sink(),
                   "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                   kLeft, kTop, plot_w(), plot_h());
  }

  double px(double x) const { return kLeft + (x - x_.lo) / x_.span() * plot_w(); }
  double py(double y) const { return kTop + plot_h() - (y - y_.lo) / y_.span() * plot_h(); }

  void y_ticks() {
    for (int i = 0; i <= 4; ++i) {
      const double v = y_.lo + y_.span() * i / 4;
      fmt::format_to(sink(), "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n",
                     kLeft - 5, py(v) + 4, v);
      fmt::format_to(sink(), "<line x1=\"{}\" x2=\"{}\" y1=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n",
                     kLeft, kLeft + plot_w(), py(v), py(v));
    }
  }

  void x_ticks() {
    for (int i = 0; i <= 4; ++i) {
      const double v = x_.lo + x_.span() * i / 4;
      fmt::format_to(sink(), "<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n",
                     px(v), kTop + plot_h() + 16, v);
    }
  }

  std::back_insert_iterator<std::string> sink() { return std::back_inserter(out_); }

  std::string finish() {
    out_ += "</svg>\n";
    return std::move(out_);
  }

  static double plot_w() { return kWidth - kLeft - kRight; }
  static double plot_h() { return kHeight - kTop - kBottom; }

 private:
  Range x_, y_;
  std::string out_;
};

std::pair<Range, Range> bounds(const std::vector<std::pair<double, double>>& pts) {
  if (pts.empty()) throw Error("nothing to plot");
  double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
  for (const auto& [x, y] : pts) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  return {padded(x0, x1), padded(y0, y1)};
}

}  // namespace

std::string svg_scatter(const std::vector<std::pair<double, double>>& points, const Axes& axes) {
  const auto [xr, yr] = bounds(points);
  Canvas c(xr, yr, axes);
  c.y_ticks();
  c.x_ticks();
  for (const auto& [x, y] : points) {
    fmt::format_to(c.sink(),
                   "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n",
                   c.px(x), c.py(y));
  }
  return c.finish();
}

std::string svg_bars(const std::vector<Bar>& bars, const Axes& axes) {
  if (bars.empty()) throw Error("nothing to plot");
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.value - b.error);
    hi = std::max(hi, b.value + b.error);
  }
  const Range yr = padded(lo, hi);
  Canvas c({0.0, static_cast<double>(bars.size())}, yr, axes);
  c.y_ticks();
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double x0 = c.px(i + 0.15), x1 = c.px(i + 0.85);
    const double top = c.py(std::max(b.value, 0.0)), base = c.py(std::min(b.value, 0.0));
    fmt::format_to(c.sink(),
                   "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                   x0, top, x1 - x0, base - top, i == 0 ? "#d62728" : "#1f77b4");
    if (b.error > 0.0) {
      const double xm = 0.5 * (x0 + x1);
      fmt::format_to(c.sink(),
                     "<line x1=\"{:.2f}\" x2=\"{:.2f}\" y1=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n",
                     xm, xm, c.py(b.value - b.error), c.py(b.value + b.error));
    }
    fmt::format_to(c.sink(),
                   "<text transform=\"translate({:.2f},{}) rotate(35)\" font-size=\"10\">{}</text>\n",
                   c.px(i + 0.3), kTop + Canvas::plot_h() + 10, escape(b.label));
  }
  return c.finish();
}

std::string svg_line(const std::vector<std::pair<double, double>>& points, const Axes& axes) {
  const auto [xr, yr] = bounds(points);
  Canvas c(xr, yr, axes);
  c.y_ticks();
  c.x_ticks();
  std::string path;
  for (const auto& [x, y] : points) {
    path += fmt::format("{}{:.2f},{:.2f}", path.empty() ? "" : " ", c.px(x), c.py(y));
  }
  fmt::format_to(c.sink(), "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
                 path);
  for (const auto& [x, y] : points) {
    fmt::format_to(c.sink(), "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#1f77b4\"/>\n",
                   c.px(x), c.py(y));
  }
  return c.finish();
}

}  // namespace nrdq::harness
