// Constructive transverse-contraction metrics for autonomous fields with a
// stable limit cycle: the singular metric M_s = ∫ VᵀQV dt and the full metric
// M_z built from the flow-aligned coordinates (δz₁ along f, δz₂ transverse).
#pragma once

#include <functional>
#include <vector>

#include "sidmp/contraction.hpp"

namespace sidmp::contraction {

struct SingularMetricOptions {
  double step = 1e-3;           // RK4 step along the flow
  double horizon_max = 100.0;   // give up past this time
  double tail_tolerance = 1e-8;  // stop once ‖Q(x(T))V(T)‖ ≤ this
  double rate = 0.0;            // certified transverse λ̂, used for the tail bound
  double rank_tolerance = 1e-6;  // eigenvalues below rank_tolerance·trace count as zero
  /// Weight Q(x); default I − ffᵀ/|f|².
  std::function<Mat(const Vec& x, const Vec& fx)> Q;
};

struct SingularMetricPoint {
  Vec x;
  Mat Ms;
  Mat Ms_flow;             // same integral computed from the plain fundamental matrix
  double horizon = 0.0;
  double tail_norm = 0.0;  // ‖Q V(T)‖
  double tail_bound = 0.0;  // ‖QV(T)‖²·‖Q‖/(2λ̂)
  double residual = 0.0;   // |M_s f| / (‖M_s‖ |f|)
  int rank = 0;
  Vec eigenvalues;         // ascending
};

struct SingularMetricBuild {
  VectorField field;
  SingularMetricOptions options;
  std::vector<SingularMetricPoint> points;
};

/// Integrates v̇ = (A − ffᵀ(A + Aᵀ)/fᵀf)v for the fundamental matrix V along
/// the flow from each base point and accumulates M_s with the trapezoid rule.
/// Throws BuildFailure when QV does not decay within the horizon.
SingularMetricBuild build_singular_metric(const VectorField& field, const std::vector<Vec>& base_points,
                                          const SingularMetricOptions& options);

struct FullMetricOptions {
  double r = -1.0;         // rate parameter r < λ̂; default 0.5·λ̂
  double fd_delta = 1e-3;  // time offset for Θ̇ by central differences along the flow
  int max_doublings = 40;  // attempts at scaling Q until M₂₂ > M₂₁M₂₁ᵀ
};

struct FullMetricPoint {
  Vec x;
  Vec M21;
  Mat M22;
  Mat Mz;
  Mat theta_x;  // [f, E]⁻¹
  Mat theta;    // chol(M_z)ᵀ Θ_x
  Mat Mx;       // ΘᵀΘ
  Vec fs_eigenvalues;  // generalized Jacobian symmetric part, non-increasing
};

struct FullMetricBuild {
  double r = 0.0;
  double q = 1.0;           // final Q scaling
  double horizon = 0.0;     // fixed quadrature horizon shared by every evaluation
  std::vector<FullMetricPoint> points;
  Metric metric;            // M_x(x) usable anywhere near the orbit (expensive)
  std::function<Mat(const Vec&)> theta;
};

/// Throws ParameterError when r ≥ λ̂ and BuildFailure when M_z cannot be made
/// positive definite.
FullMetricBuild build_full_metric(const SingularMetricBuild& singular,
                                  const FullMetricOptions& options = {});

/// Eigenvalues (non-increasing) of the symmetric part of F = (ΘA + Θ̇)Θ⁻¹ at x.
Vec generalized_jacobian_eigenvalues(const VectorField& field,
                                     const std::function<Mat(const Vec&)>& theta, const Vec& x,
                                     double fd_delta);

/// Orthonormal basis of the complement of f: the 90° rotation of f/|f| in
/// the plane, a Householder completion otherwise.
Mat transverse_basis(const Vec& f);

}  // namespace sidmp::contraction
