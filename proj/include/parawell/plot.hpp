/**
 * @file plot.hpp
 * @brief Minimal SVG line charts with optional log-scaled axes.
 *
 * Every chart is built from a PlotFrame, the affine map (in log space for
 * log axes) between data and pixel coordinates, so emitted coordinates can be
 * mapped back to data values.
 */
#ifndef PARAWELL_PLOT_HPP
#define PARAWELL_PLOT_HPP

#include <string>
#include <utility>
#include <vector>

namespace parawell {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

class PlotFrame {
 public:
  static constexpr double kWidth = 640.0;
  static constexpr double kHeight = 420.0;
  static constexpr double kLeft = 80.0;
  static constexpr double kRight = 160.0;
  static constexpr double kTop = 40.0;
  static constexpr double kBottom = 50.0;

  /// Fits the data range of all plottable points (positive ones on log axes).
  PlotFrame(const std::vector<Series>& series, const Axes& axes);

  bool plottable(double x, double y) const;
  std::pair<double, double> to_pixel(double x, double y) const;
  std::pair<double, double> from_pixel(double px, double py) const;

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_min() const noexcept { return y_min_; }
  double y_max() const noexcept { return y_max_; }

 private:
  double forward_x(double x) const;
  double forward_y(double y) const;

  Axes axes_;
  double x_min_ = 0.0, x_max_ = 1.0, y_min_ = 0.0, y_max_ = 1.0;  // transformed space
};

/// Non-plottable points (nonpositive on a log axis, non-finite) are skipped.
std::string render_svg(const std::vector<Series>& series, const Axes& axes);

}  // namespace parawell

#endif  // PARAWELL_PLOT_HPP
