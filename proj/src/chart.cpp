// SPDX-License-Identifier: Apache-2.0
#include "logo/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "logo/common.hpp"

namespace logo {

namespace {

const cv::Scalar kPalette[] = {
    {180, 119, 31},  {14, 127, 255},  {44, 160, 44},  {40, 39, 214},
    {189, 103, 148}, {75, 86, 140},   {194, 119, 227}, {127, 127, 127},
};
constexpr int kPaletteSize = int(sizeof(kPalette) / sizeof(kPalette[0]));
const cv::Scalar kInk(60, 50, 40);
const cv::Scalar kGrid(230, 226, 222);

struct Frame {
  cv::Mat canvas;
  cv::Rect plot;  // plotting area inside the margins
};

Frame make_frame(const std::string& title, int width, int height) {
  Frame f;
  f.canvas = cv::Mat(height, width, CV_8UC3, cv::Scalar(252, 250, 248));
  f.plot = cv::Rect(70, 52, width - 90, height - 104);
  cv::putText(f.canvas, title, {f.plot.x, 32}, cv::FONT_HERSHEY_SIMPLEX, 0.62, kInk, 1,
              cv::LINE_AA);
  return f;
}

std::string tick_label(double v) {
  char buf[32];
  double a = std::abs(v);
  if (v == 0.0)
    std::snprintf(buf, sizeof(buf), "0");
  else if (a >= 1000.0 || a < 0.01)
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  else
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Round the raw span to a tick step of 1, 2, or 5 times a power of ten.
double nice_step(double span, int target_ticks) {
  double raw = span / std::max(1, target_ticks);
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double frac = raw / mag;
  double step = frac <= 1.0 ? 1.0 : frac <= 2.0 ? 2.0 : frac <= 5.0 ? 5.0 : 10.0;
  return step * mag;
}

void draw_y_axis(Frame& f, double lo, double hi, const std::string& label) {
  const double step = nice_step(hi - lo, 6);
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * (hi - lo); v += step) {
    int y = f.plot.y + f.plot.height -
            int(std::lround((v - lo) / (hi - lo) * f.plot.height));
    cv::line(f.canvas, {f.plot.x, y}, {f.plot.x + f.plot.width, y}, kGrid, 1, cv::LINE_AA);
    std::string t = tick_label(v);
    cv::putText(f.canvas, t, {6, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4, kInk, 1, cv::LINE_AA);
  }
  cv::putText(f.canvas, label, {6, f.plot.y - 10}, cv::FONT_HERSHEY_SIMPLEX, 0.45, kInk, 1,
              cv::LINE_AA);
}

void finish(Frame& f, const std::string& path) {
  cv::rectangle(f.canvas, f.plot, kInk, 1, cv::LINE_AA);
  if (!cv::imwrite(path, f.canvas)) throw IoError("failed to write chart: " + path);
}

void legend(Frame& f, const std::vector<Series>& series) {
  int x = f.plot.x + 12, y = f.plot.y + 18;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const cv::Scalar& color = kPalette[s % kPaletteSize];
    cv::rectangle(f.canvas, cv::Rect(x, y - 8, 14, 8), color, cv::FILLED);
    cv::putText(f.canvas, series[s].label, {x + 20, y}, cv::FONT_HERSHEY_SIMPLEX, 0.42, kInk, 1,
                cv::LINE_AA);
    y += 18;
  }
}

}  // namespace

void render_line_chart(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, int width, int height) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    LOGO_REQUIRE(s.x.size() == s.y.size(), "series x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  if (!std::isfinite(x_lo) || !std::isfinite(y_lo)) throw IoError("no data points to plot");
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  Frame f = make_frame(title, width, height);
  draw_y_axis(f, y_lo, y_hi, y_label);

  const double x_step = nice_step(x_hi - x_lo, 8);
  for (double v = std::ceil(x_lo / x_step) * x_step; v <= x_hi + 1e-12 * (x_hi - x_lo);
       v += x_step) {
    int x = f.plot.x + int(std::lround((v - x_lo) / (x_hi - x_lo) * f.plot.width));
    cv::line(f.canvas, {x, f.plot.y}, {x, f.plot.y + f.plot.height}, kGrid, 1, cv::LINE_AA);
    std::string t = tick_label(v);
    cv::putText(f.canvas, t, {x - int(t.size()) * 4, f.plot.y + f.plot.height + 18},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, kInk, 1, cv::LINE_AA);
  }
  cv::putText(f.canvas, x_label, {f.plot.x + f.plot.width - int(x_label.size()) * 8,
                                  f.plot.y + f.plot.height + 38},
              cv::FONT_HERSHEY_SIMPLEX, 0.45, kInk, 1, cv::LINE_AA);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const cv::Scalar& color = kPalette[s % kPaletteSize];
    cv::Point prev;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      cv::Point pt(
          f.plot.x + int(std::lround((series[s].x[i] - x_lo) / (x_hi - x_lo) * f.plot.width)),
          f.plot.y + f.plot.height -
              int(std::lround((series[s].y[i] - y_lo) / (y_hi - y_lo) * f.plot.height)));
      if (i > 0) cv::line(f.canvas, prev, pt, color, 2, cv::LINE_AA);
      cv::circle(f.canvas, pt, 2, color, cv::FILLED, cv::LINE_AA);
      prev = pt;
    }
  }
  legend(f, series);
  finish(f, path);
}

void render_bar_chart(const std::string& path, const std::string& title,
                      const std::vector<std::string>& groups,
                      const std::vector<Series>& series, int width, int height) {
  LOGO_REQUIRE(!groups.empty() && !series.empty(), "bar chart needs groups and series");
  double y_lo = 0.0, y_hi = 0.0;
  for (const auto& s : series) {
    LOGO_REQUIRE(s.y.size() == groups.size(), "series length must match group count");
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  y_hi += 0.08 * (y_hi - y_lo);

  Frame f = make_frame(title, width, height);
  draw_y_axis(f, y_lo, y_hi, "");

  const int n_groups = int(groups.size());
  const int n_series = int(series.size());
  const double group_w = double(f.plot.width) / n_groups;
  const double bar_w = std::max(2.0, group_w * 0.8 / n_series);
  const int y0 = f.plot.y + f.plot.height -
                 int(std::lround((0.0 - y_lo) / (y_hi - y_lo) * f.plot.height));
  for (int g = 0; g < n_groups; ++g) {
    for (int s = 0; s < n_series; ++s) {
      double v = series[std::size_t(s)].y[std::size_t(g)];
      int x = f.plot.x + int(std::lround(g * group_w + group_w * 0.1 + s * bar_w));
      int y = f.plot.y + f.plot.height -
              int(std::lround((v - y_lo) / (y_hi - y_lo) * f.plot.height));
      cv::Rect bar(x, std::min(y, y0), std::max(1, int(bar_w) - 1), std::max(1, std::abs(y - y0)));
      cv::rectangle(f.canvas, bar, kPalette[s % kPaletteSize], cv::FILLED);
    }
    // Group labels rotate through two rows when they would collide.
    std::string t = groups[std::size_t(g)];
    if (int(t.size()) * 7 > int(group_w) && t.size() > 8) t = t.substr(0, 7) + "..";
    int tx = f.plot.x + int(std::lround(g * group_w + group_w / 2)) - int(t.size()) * 4;
    int ty = f.plot.y + f.plot.height + (g % 2 ? 34 : 18);
    cv::putText(f.canvas, t, {tx, ty}, cv::FONT_HERSHEY_SIMPLEX, 0.38, kInk, 1, cv::LINE_AA);
  }
  legend(f, series);
  finish(f, path);
}

}  // namespace logo
