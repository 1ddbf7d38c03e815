#include "sidmp/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sidmp::svg {

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::size_t stride_for(std::size_t n, std::size_t max_points) {
  if (max_points == 0 || n <= max_points) return 1;
  return (n + max_points - 1) / max_points;
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x1 = x0 + 1;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
       num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" +
       num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    s += "<line x1=\"" + num(px(xv)) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(px(xv)) +
         "\" y2=\"" + num(kTop + ph + 5) + "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kTop + ph + 18) +
         "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(py(yv)) + "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" +
         tick(yv) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) +
       "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(kTop + ph / 2) + ")\">" + escape(y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& ser = series[k];
    const char* color = kColors[k % kColors.size()];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
      s += num(px(ser.x[i])) + "," + num(py(ser.y[i])) + " ";
    }
    s += "\"/>\n";
    const double ly = kTop + 12 + 18.0 * static_cast<double>(k);
    s += "<line x1=\"" + num(kWidth - kRight + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" +
         num(kWidth - kRight + 32) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(kWidth - kRight + 38) + "\" y=\"" + num(ly + 4) + "\">" +
         escape(ser.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string time_series(const simulate::Trajectory& traj, const std::vector<int>& columns,
                        const std::vector<std::string>& labels, const std::string& title,
                        std::size_t max_points) {
  const std::size_t stride = stride_for(traj.size(), max_points);
  std::vector<Series> series;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    Series s;
    s.label = c < labels.size() ? labels[c] : "state_" + std::to_string(columns[c]);
    for (std::size_t i = 0; i < traj.size(); i += stride) {
      s.x.push_back(traj.t[i]);
      s.y.push_back(traj.x(static_cast<Eigen::Index>(i), columns[c]));
    }
    series.push_back(std::move(s));
  }
  return line_plot(series, title, "t [s]", "state");
}

std::string phase_portrait(const simulate::Trajectory& traj,
                           const std::vector<std::pair<int, int>>& pairs,
                           const std::vector<std::string>& labels, const std::string& title,
                           std::size_t max_points) {
  const std::size_t stride = stride_for(traj.size(), max_points);
  std::vector<Series> series;
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    Series s;
    s.label = c < labels.size() ? labels[c] : "node " + std::to_string(c);
    for (std::size_t i = 0; i < traj.size(); i += stride) {
      s.x.push_back(traj.x(static_cast<Eigen::Index>(i), pairs[c].first));
      s.y.push_back(traj.x(static_cast<Eigen::Index>(i), pairs[c].second));
    }
    series.push_back(std::move(s));
  }
  return line_plot(series, title, "first component", "second component");
}

}  // namespace sidmp::svg
