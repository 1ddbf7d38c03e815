// Analysis side of sparse inhibition: the gain threshold above which an added
// contracting field dominates, and the weighted inhibition field.
#pragma once

#include "sidmp/contraction.hpp"
#include "sidmp/network.hpp"

namespace sidmp::network {

struct ThresholdEstimate {
  double alpha0 = 0.0;     // β̂ / (2λ₂)
  double beta_hat = 0.0;   // max over samples of λ_max(∂M·f₁ + A₁ᵀM + MA₁) relative to M
  double lambda2 = 0.0;    // certified contraction rate of g
  Vec witness;             // sample attaining β̂
  int samples = 0;
  bool sampled_estimate = true;  // β̂ is a maximum over samples, not a supremum
  contraction::Certificate g_certificate;
};

/// Gain α₀ such that f₁ + α·g is contracting on the region for α > α₀.
/// Throws PreconditionError when g is not contracting under the metric.
ThresholdEstimate inhibition_threshold_estimate(const VectorField& f1, const VectorField& g,
                                                const RegionSampler& region,
                                                const contraction::Metric& metric,
                                                const contraction::CheckOptions& opt = {});

struct WeightedInhibition {
  /// f_inh(x) = −Lx + [α₁g₁(x₁); …; α_N g_N(x_N)]
  VectorField standalone;
  /// F_x(x) + f_inh(x)
  VectorField combined;
};

/// Builds the inhibition fields from the rule's weights (missing nodes get α = 0).
/// Throws ParameterError on negative weights.
WeightedInhibition weighted_inhibition_field(const CouplingGraph& graph,
                                             const HeterogeneousParams& hetero,
                                             const InhibitionRule& rule);

/// λ_max of the symmetric part of a field's Jacobian at x.
double symmetric_jacobian_max(const VectorField& f, const Vec& x);

}  // namespace sidmp::network
