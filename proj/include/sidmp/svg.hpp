// Static SVG line plots of trajectories.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sidmp/simulate.hpp"

namespace sidmp::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with axes, tick labels and a legend.
std::string line_plot(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

/// State components against time; at most `max_points` samples per series.
std::string time_series(const simulate::Trajectory& traj, const std::vector<int>& columns,
                        const std::vector<std::string>& labels, const std::string& title,
                        std::size_t max_points = 2000);

/// One curve per (column a, column b) pair.
std::string phase_portrait(const simulate::Trajectory& traj,
                           const std::vector<std::pair<int, int>>& pairs,
                           const std::vector<std::string>& labels, const std::string& title,
                           std::size_t max_points = 4000);

}  // namespace sidmp::svg
