// Sample-based contraction and transverse-contraction checks, matrix
// measures, metric pushforward, hierarchy composition and the disturbance
// tube bound. Every certificate is numerical evidence gathered on a finite
// sample set, not a formal proof.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sidmp/dynamics.hpp"
#include "sidmp/network.hpp"
#include "sidmp/region.hpp"
#include "sidmp/simulate.hpp"

namespace sidmp::contraction {

enum class Norm { one, two, inf };

/// μ₁, μ₂ or μ_∞ of a square matrix.
double matrix_measure(const Mat& A, Norm norm);

/// Symmetric positive definite M(x), optionally with a factor Θ (M = ΘᵀΘ) and
/// an analytic derivative along a field.
class Metric {
 public:
  using Eval = std::function<Mat(const Vec& x)>;
  /// Ṁ at x given f(x).
  using Derivative = std::function<Mat(const Vec& x, const Vec& fx)>;

  Metric() = default;
  static Metric identity(int n);
  static Metric constant(Mat M, std::string id = "constant");
  static Metric function(std::string id, int n, Eval M, Eval factor = {}, Derivative dM = {});

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }
  bool is_constant() const { return constant_.has_value(); }

  Mat operator()(const Vec& x) const;
  /// Θ(x); the upper Cholesky factor U (M = UᵀU) when none was supplied.
  Mat factor(const Vec& x) const;
  /// Ṁ along f: analytic if supplied, else a directional central difference
  /// with step 1e-6·(1+|x|) along f/|f|.
  Mat derivative(const Vec& x, const Vec& fx) const;

 private:
  std::string id_ = "identity";
  int dim_ = 0;
  std::optional<Mat> constant_;
  Eval eval_;
  Eval factor_;
  Derivative derivative_;
};

enum class CertificateKind { contraction, transverse, synchronization, unique_equilibrium };
std::string kind_name(CertificateKind kind);

struct Certificate {
  CertificateKind kind = CertificateKind::contraction;
  std::string metric_id;
  std::string region;
  double rate = 0.0;          // claimed λ
  double worst_margin = 0.0;  // rate units; pass ⇔ worst_margin ≤ tolerance
  Vec witness;
  int samples = 0;
  double tolerance = 1e-9;
  bool pass = false;
  double min_metric_eigenvalue = 0.0;
  std::optional<RegionSampler> sampler;
  /// Additional named figures (sync thresholds, matrix-measure forms, ...).
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::string> notes;
  std::string disclaimer = "sample-based numerical evidence, not a formal proof";

  double value(const std::string& name) const;
};

struct CheckOptions {
  double tolerance = 1e-9;
  unsigned threads = 0;
};

/// Margin at one point: ½·λ_max of (Ṁ + AᵀM + MA + 2λM) relative to M.
double contraction_margin(const VectorField& f, const Metric& M, const Vec& x, double rate);
/// Same quadratic form restricted to {δ : f(x)ᵀM(x)δ = 0}.
double transverse_margin(const VectorField& f, const Metric& M, const Vec& x, double rate);

Certificate check_contraction(const VectorField& f, const Metric& M, const RegionSampler& region,
                              double rate, const CheckOptions& opt = {});

/// Throws PreconditionError listing the point when f vanishes at a sample.
Certificate check_transverse_contraction(const VectorField& f, const Metric& M,
                                         const RegionSampler& region, double rate,
                                         const CheckOptions& opt = {});

/// Largest rate the samples support: −max margin at λ = 0.
double certified_rate(const VectorField& f, const Metric& M, const RegionSampler& region,
                      bool transverse, const CheckOptions& opt = {});

/// λ_{N+1}(L_K) > max_i sup λ_max(A_is). `node_fields` holds either one field
/// shared by all nodes or one per node. Values reported: lambda_n_plus_1,
/// sup_lambda_max_As, threshold_factor (gain scale at which the inequality
/// becomes tight), projected_min_eigenvalue, projected_pass, and
/// mu_{1,2,inf}_{nodes,coupling,sum}.
Certificate check_sync_condition(const network::BlockLaplacian& laplacian,
                                 const std::vector<VectorField>& node_fields,
                                 const RegionSampler& region, const CheckOptions& opt = {});

/// M′(y′) = J⁻ᵀ M(T⁻¹y′) J⁻¹ with J evaluated at T⁻¹y′.
Metric pushforward_metric(const Metric& M, const dynamics::Diffeomorphism& T);

/// Combination along a cascade: all contracting → contraction; exactly one
/// transverse layer → transverse; more than one is unsupported.
Certificate check_hierarchy(const std::vector<Certificate>& layers);

/// Transverse certificate on 𝒦 plus contraction certificate on 𝒞 with a
/// nonempty sampled intersection: a unique equilibrium in 𝒦 ∪ 𝒞 is predicted.
Certificate check_unique_equilibrium(const Certificate& transverse_K,
                                     const Certificate& contraction_C);

struct TubeBoundConfig {
  Vec x0;
  double step = 1e-3;
  double duration = 5.0;
  double w_bar = 0.05;
  double hold = 0.1;          // random realizations: direction hold time
  bool constant = false;      // constant disturbance with a seeded direction
  int runs = 100;
  std::uint64_t seed = 1;
  int sample_stride = 10;     // disturbed samples checked
  double rate = 0.0;          // certified transverse λ
  Mat metric;                 // constant metric (identity if empty)
  std::optional<RegionSampler> region;  // 𝒦; runs leaving it are inconclusive
  unsigned threads = 0;
};

struct TubeBoundReport {
  double R = 1.0;           // θ̄/θ̲
  double bound = 0.0;       // (R/λ)·w̄
  double worst_distance = 0.0;
  double worst_ratio = 0.0;
  int runs = 0;
  int inconclusive = 0;
  int violations = 0;
  bool pass = false;
  std::vector<double> per_run_max;
};

TubeBoundReport tube_bound_check(const VectorField& f, const TubeBoundConfig& config);

}  // namespace sidmp::contraction
