#include "parawell/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace parawell {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string tick_label(double transformed, bool log) {
  char buf[64];
  if (log) {
    std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(transformed)));
  } else {
    std::snprintf(buf, sizeof buf, "%.3g", transformed);
  }
  return buf;
}

}  // namespace

PlotFrame::PlotFrame(const std::vector<Series>& series, const Axes& axes) : axes_(axes) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!plottable(x, y)) continue;
      xlo = std::min(xlo, forward_x(x));
      xhi = std::max(xhi, forward_x(x));
      ylo = std::min(ylo, forward_y(y));
      yhi = std::max(yhi, forward_y(y));
    }
  }
  if (!std::isfinite(xlo)) {
    xlo = 0.0;
    xhi = 1.0;
    ylo = 0.0;
    yhi = 1.0;
  }
  if (xhi - xlo <= 0.0) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  if (yhi - ylo <= 0.0) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  if (axes_.log_y) {
    ylo = std::floor(ylo);
    yhi = std::ceil(yhi);
  }
  x_min_ = xlo;
  x_max_ = xhi;
  y_min_ = ylo;
  y_max_ = yhi;
}

double PlotFrame::forward_x(double x) const { return axes_.log_x ? std::log10(x) : x; }
double PlotFrame::forward_y(double y) const { return axes_.log_y ? std::log10(y) : y; }

bool PlotFrame::plottable(double x, double y) const {
  if (!std::isfinite(x) || !std::isfinite(y)) return false;
  if (axes_.log_x && !(x > 0.0)) return false;
  if (axes_.log_y && !(y > 0.0)) return false;
  return true;
}

std::pair<double, double> PlotFrame::to_pixel(double x, double y) const {
  const double w = kWidth - kLeft - kRight;
  const double h = kHeight - kTop - kBottom;
  const double px = kLeft + (forward_x(x) - x_min_) / (x_max_ - x_min_) * w;
  const double py = kTop + (1.0 - (forward_y(y) - y_min_) / (y_max_ - y_min_)) * h;
  return {px, py};
}

std::pair<double, double> PlotFrame::from_pixel(double px, double py) const {
  const double w = kWidth - kLeft - kRight;
  const double h = kHeight - kTop - kBottom;
  double x = x_min_ + (px - kLeft) / w * (x_max_ - x_min_);
  double y = y_min_ + (1.0 - (py - kTop) / h) * (y_max_ - y_min_);
  if (axes_.log_x) x = std::pow(10.0, x);
  if (axes_.log_y) y = std::pow(10.0, y);
  return {x, y};
}

std::string render_svg(const std::vector<Series>& series, const Axes& axes) {
  const PlotFrame frame(series, axes);
  const double w = PlotFrame::kWidth, h = PlotFrame::kHeight;
  const double left = PlotFrame::kLeft, right = w - PlotFrame::kRight;
  const double top = PlotFrame::kTop, bottom = h - PlotFrame::kBottom;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(axes.title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left
      << "\" height=\"" << bottom - top << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks: decades on log axes, five intervals on linear ones.
  auto ticks = [](double lo, double hi, bool log) {
    std::vector<double> out;
    if (log) {
      const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
      for (double v = std::ceil(lo); v <= hi + 1e-9; v += step) out.push_back(v);
    } else {
      for (int i = 0; i <= 5; ++i) out.push_back(lo + (hi - lo) * i / 5.0);
    }
    return out;
  };
  const double plot_w = right - left, plot_h = bottom - top;
  for (double tx : ticks(frame.x_min(), frame.x_max(), axes.log_x)) {
    const double px = left + (tx - frame.x_min()) / (frame.x_max() - frame.x_min()) * plot_w;
    svg << "<line x1=\"" << fixed3(px) << "\" y1=\"" << bottom << "\" x2=\"" << fixed3(px)
        << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << fixed3(px) << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">"
        << tick_label(tx, axes.log_x) << "</text>\n";
  }
  for (double ty : ticks(frame.y_min(), frame.y_max(), axes.log_y)) {
    const double py = top + (1.0 - (ty - frame.y_min()) / (frame.y_max() - frame.y_min())) * plot_h;
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << fixed3(py) << "\" x2=\"" << left
        << "\" y2=\"" << fixed3(py) << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << fixed3(py + 4) << "\" text-anchor=\"end\">"
        << tick_label(ty, axes.log_y) << "</text>\n";
  }
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">"
      << escape(axes.x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (top + bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (top + bottom) / 2 << ")\">" << escape(axes.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    svg << "<polyline data-series=\"" << escape(series[i].label) << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : series[i].points) {
      if (!frame.plottable(x, y)) continue;
      const auto [px, py] = frame.to_pixel(x, y);
      svg << (first ? "" : " ") << fixed3(px) << ',' << fixed3(py);
      first = false;
    }
    svg << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(i) + 10.0;
    svg << "<line x1=\"" << right + 10 << "\" y1=\"" << ly << "\" x2=\"" << right + 30 << "\" y2=\""
        << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    svg << "<text x=\"" << right + 35 << "\" y=\"" << ly + 4 << "\">" << escape(series[i].label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace parawell
