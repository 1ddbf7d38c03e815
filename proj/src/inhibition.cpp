#include "sidmp/inhibition.hpp"

#include <limits>

#include "sidmp/parallel.hpp"

namespace sidmp::network {

ThresholdEstimate inhibition_threshold_estimate(const VectorField& f1, const VectorField& g,
                                                const RegionSampler& region,
                                                const contraction::Metric& metric,
                                                const contraction::CheckOptions& opt) {
  if (f1.dim() != g.dim() || f1.dim() != metric.dim() || f1.dim() != region.dim())
    throw DimensionError("field, inhibition, metric and region dimensions differ");
  ThresholdEstimate est;
  est.lambda2 = contraction::certified_rate(g, metric, region, false, opt);
  if (!(est.lambda2 > 0.0))
    throw PreconditionError("inhibition field is not contracting under the supplied metric (rate " +
                            std::to_string(est.lambda2) + ")");
  est.g_certificate = contraction::check_contraction(g, metric, region, est.lambda2, opt);

  const std::vector<Vec> pts = region.samples();
  std::vector<double> beta(pts.size());
  parallel_for(
      pts.size(),
      [&](std::size_t i) {
        const Vec& x = pts[i];
        const Mat Mx = metric(x);
        const Mat A = f1.jacobian(x);
        Mat S = metric.derivative(x, f1(x)) + A.transpose() * Mx + Mx * A;
        S = 0.5 * (S + S.transpose());
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(S, Mx, Eigen::EigenvaluesOnly);
        beta[i] = es.eigenvalues().maxCoeff();
      },
      opt.threads);
  est.beta_hat = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (beta[i] > est.beta_hat) {
      est.beta_hat = beta[i];
      est.witness = pts[i];
    }
  est.samples = static_cast<int>(pts.size());
  est.alpha0 = est.beta_hat / (2.0 * est.lambda2);
  return est;
}

WeightedInhibition weighted_inhibition_field(const CouplingGraph& graph,
                                             const HeterogeneousParams& hetero,
                                             const InhibitionRule& rule) {
  for (double w : rule.weights)
    if (!(w >= 0.0)) throw ParameterError("inhibition weights must be nonnegative");
  InhibitionRule always = rule;
  always.schedule.clear();
  const CoupledCanonical net(graph, hetero, always);
  const int n = net.node_dim(), total = net.dim();
  const Mat L = net.laplacian().L;

  // Linear part −L − diag(α_i k_inh I) and constant part α_i k_inh x_{i,d}.
  Mat J = -L;
  Vec c = Vec::Zero(total);
  for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
    const int i = rule.nodes[m];
    const double a = rule.weight(m) * rule.gain;
    J.block(i * n, i * n, n, n) -= a * Mat::Identity(n, n);
    c.segment(i * n, n) += a * rule.goals[m];
  }

  WeightedInhibition out;
  out.standalone = VectorField(
      total, [J, c](double, const Vec& x) { return Vec(J * x + c); },
      [J](double, const Vec&) { return J; });

  const simulate::Mode armed = net.all_armed();
  std::vector<dynamics::CanonicalSystem> nodes = hetero.nodes;
  out.combined = VectorField(
      total, [net, armed](double, const Vec& x) { return net.eval_with_reference(x, Vec(), armed); },
      [nodes, J, n](double, const Vec& x) {
        Mat A = J;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          const int o = static_cast<int>(i) * n;
          A.block(o, o, n, n) += nodes[i].jacobian_x(x.segment(o, n), Vec());
        }
        return A;
      });
  return out;
}

double symmetric_jacobian_max(const VectorField& f, const Vec& x) {
  return contraction::matrix_measure(f.jacobian(x), contraction::Norm::two);
}

}  // namespace sidmp::network
