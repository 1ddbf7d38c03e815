// Least-squares fitting of forcing weights from demonstrations.
#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "sidmp/dynamics.hpp"

namespace sidmp::learning {

/// Samples are rows; outputs are columns.
struct Demonstration {
  std::vector<double> t;
  Mat y;
  Mat y_dot;
  std::optional<Mat> y_ddot;  // differentiated from y_dot when absent
  Vec stiffness;
  Vec damping;
  Vec goal;
  double tau = 1.0;

  int samples() const { return static_cast<int>(t.size()); }
  int outputs() const { return static_cast<int>(y.cols()); }
  void validate() const;
};

/// Second-order three-point differences on a possibly nonuniform grid,
/// one-sided at the ends. Rows of `v` are samples.
Mat differentiate(const std::vector<double>& t, const Mat& v);

/// f*(t) = τÿ − k(g − y) + bẏ per sample and output.
Mat compute_target_forcing(const Demonstration& demo);

/// Canonical state sampled on the time grid (rows are samples), integrated
/// with RK4 using `substeps` steps per grid interval.
Mat phase_rollout(const dynamics::CanonicalSystem& canonical, const Vec& x0,
                  const std::vector<double>& t, int substeps = 10);

struct FitResult {
  dynamics::ForcingFunction forcing;  // basis from the request, fitted weights
  double rmse = 0.0;
  double baseline_rmse = 0.0;  // zero-weight residual
  double ridge = 0.0;
};

/// Minimizes Σ|f* − f_w(x)|² + ε|w|² jointly over all bases. ε = 0 solves by
/// column-pivoted QR and throws ConditioningError on a rank-deficient design;
/// ε > 0 uses the regularized normal equations; ε < 0 selects the default
/// 1e-10·trace(ΦᵀΦ)/columns.
FitResult fit_weights(const Mat& targets, const Mat& phase, const dynamics::ForcingFunction& basis,
                      double ridge = -1.0);

/// Reads `t,y,ydot[,yddot]` (one output) or `t,y_0,ydot_0[,yddot_0],y_1,...`.
Demonstration load_demonstration_csv(const std::filesystem::path& path);
Demonstration parse_demonstration_csv(std::string_view text);

}  // namespace sidmp::learning
