// Movement-primitive vector fields: reference filters, canonical (phase)
// systems, forcing bases, transformation systems, and their composition into
// a single reference -> canonical -> transformation cascade.
#pragma once

#include <numbers>
#include <optional>
#include <vector>

#include "sidmp/types.hpp"

namespace sidmp::dynamics {

// ---------------------------------------------------------------------------
// Oscillators
// ---------------------------------------------------------------------------

/// Andronov-Hopf oscillator with a stable limit cycle of radius `radius`.
struct HopfParams {
  double omega = 2.0 * std::numbers::pi;  // rad/s
  double rho = 1.0;                       // 1/(unit^2 s)
  double radius = 1.0;
  double tau = 1.0;  // s
  void validate() const;
};

/// τẋ₁ = ωx₂ + ρ(r²−|x|²)x₁,  τẋ₂ = −ωx₁ + ρ(r²−|x|²)x₂
Vec eval_hopf(const HopfParams& p, const Vec& x);
Mat hopf_jacobian(const HopfParams& p, const Vec& x);

/// Van der Pol oscillator. The default nonlinearity is μ(1−x₁)x₂; set
/// `classical` for the textbook μ(1−x₁²)x₂.
struct VanDerPolParams {
  double omega = 2.0 * std::numbers::pi;
  double mu = 1.0;
  bool classical = false;
  void validate() const;
};

Vec eval_vanderpol(const VanDerPolParams& p, const Vec& x);
Mat vanderpol_jacobian(const VanDerPolParams& p, const Vec& x);

// ---------------------------------------------------------------------------
// Canonical system
// ---------------------------------------------------------------------------

enum class CanonicalKind { exponential_decay, hopf, vanderpol, custom };

/// Phase provider of a primitive. Exponential decay is 1-D (τẋ = −α_x x),
/// the oscillators are 2-D, a custom field has any dimension.
struct CanonicalSystem {
  CanonicalKind kind = CanonicalKind::hopf;
  HopfParams hopf;
  VanDerPolParams vanderpol;
  double alpha_x = 1.0;  // exponential decay rate, 1/s
  double tau = 1.0;      // exponential decay time scale
  VectorField custom;
  /// When set, the Hopf radius is read from this component of the reference state.
  std::optional<int> radius_ref_index;

  static CanonicalSystem exponential(double alpha_x, double tau = 1.0);
  static CanonicalSystem make_hopf(const HopfParams& p);
  static CanonicalSystem make_vanderpol(const VanDerPolParams& p);
  static CanonicalSystem make_custom(VectorField f);

  int dim() const;
  bool rotation_invariant() const { return kind == CanonicalKind::hopf; }
  void validate() const;

  Vec eval(const Vec& x, const Vec& r) const;
  Mat jacobian_x(const Vec& x, const Vec& r) const;
  /// Standalone field with the reference frozen at `r`.
  VectorField field(const Vec& r = Vec()) const;

 private:
  HopfParams hopf_for(const Vec& r) const;
};

// ---------------------------------------------------------------------------
// Forcing
// ---------------------------------------------------------------------------

enum class BasisKind { gaussian, von_mises };

/// Normalized basis mixture multiplied by the phase.
///
/// Weights are stored with one row per basis function. For Gaussian bases
/// the phase is scalar and column k holds the weights of output k. For von
/// Mises bases the phase is a 2-vector and columns (2k, 2k+1) hold the
/// 2-vector weight of output k.
struct ForcingFunction {
  BasisKind kind = BasisKind::gaussian;
  std::vector<double> centers;  // c_i (phase units) or θ_i (rad)
  double width = 1.0;           // σ₁
  Mat weights;

  static ForcingFunction gaussian(std::vector<double> centers, double width, Mat weights);
  static ForcingFunction von_mises(std::vector<double> centers, double width, Mat weights);
  /// Evenly spaced von Mises centres on [0, 2π).
  static std::vector<double> uniform_angles(int count);

  int basis_count() const { return static_cast<int>(centers.size()); }
  int phase_dim() const { return kind == BasisKind::gaussian ? 1 : 2; }
  int output_dim() const;
  void validate() const;

  /// Raw activations Φ_i.
  Vec activations(const Vec& phase) const;
  /// Φ_i / ΣΦ_j. Throws DegenerateBasisError when the sum underflows.
  Vec normalized(const Vec& phase) const;
};

Vec eval_forcing(const ForcingFunction& forcing, const Vec& phase);

// ---------------------------------------------------------------------------
// Reference and transformation systems
// ---------------------------------------------------------------------------

/// First-order low-pass filter ṙ = α ∘ (r_ext(t) − r).
struct ReferenceSystem {
  Vec gains;
  std::function<Vec(double)> command;

  static ReferenceSystem constant(Vec gains, Vec command);
  /// Piecewise-constant command; `steps` holds (switch time, value) pairs in order.
  static ReferenceSystem piecewise(Vec gains, Vec initial,
                                   std::vector<std::pair<double, Vec>> steps);

  int dim() const { return static_cast<int>(gains.size()); }
  void validate() const;
  Vec eval(double t, const Vec& r) const;
};

/// g(x, r) = offset + a(r)·s(θ(x)) with a(r) = amp + amp_gain·r[amp_ref_index]
/// and s(θ) = Σ_h cos_h cos(hθ) + sin_h sin(hθ).
struct HarmonicGoal {
  double offset = 0.0;
  double amp = 1.0;
  double amp_gain = 0.0;
  int amp_ref_index = -1;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;

  double value(double theta, const Vec& r) const;
  /// Time derivative along the flow given θ̇ and ṙ.
  double rate(double theta, double theta_dot, const Vec& r, const Vec& r_dot) const;
};

struct Goal {
  enum class Kind { constant, reference, harmonic };
  Kind kind = Kind::constant;
  double value = 0.0;
  int ref_index = 0;
  HarmonicGoal harmonic;

  static Goal fixed(double g) { return Goal{Kind::constant, g, 0, {}}; }
  static Goal from_reference(int index) { return Goal{Kind::reference, 0.0, index, {}}; }
  static Goal phase_based(HarmonicGoal h) { return Goal{Kind::harmonic, 0.0, 0, std::move(h)}; }
};

/// τÿ = k(g − y) + b(ġ_target − ẏ) + f(x), one row per output.
///
/// ġ_target is zero for constant and reference goals (the classic spring-damper
/// form) and the flow derivative of the goal for harmonic goals.
struct TransformationSystem {
  Vec stiffness;
  Vec damping;
  double tau = 1.0;
  std::vector<Goal> goals;
  std::optional<ForcingFunction> forcing;

  int dim() const { return static_cast<int>(stiffness.size()); }
  int state_dim() const { return 2 * dim(); }
  void validate() const;

  /// `state` = (y, ẏ); returns (ẏ, ÿ).
  Vec eval(const Vec& state, const Vec& x, const Vec& x_dot, const Vec& r,
           const Vec& r_dot) const;
};

// ---------------------------------------------------------------------------
// Single primitive and hierarchy composition
// ---------------------------------------------------------------------------

struct DmpNode {
  std::optional<ReferenceSystem> reference;
  CanonicalSystem canonical;
  TransformationSystem transform;
  Vec r;
  Vec x;
  Vec y;      // positions
  Vec y_dot;  // velocities
};

struct DiscreteDmpRate {
  Vec y_dot;
  Vec y_ddot;
  double x_dot = 0.0;
};

/// Rates of a discrete primitive at its current state.
DiscreteDmpRate eval_discrete_dmp(const DmpNode& node, double t);

struct HierarchyLayout {
  int r_offset = 0;
  int r_dim = 0;
  int x_offset = 0;
  int x_dim = 0;
  std::vector<int> y_offsets;
  std::vector<int> y_dims;  // state dims (2 × outputs)
  int total = 0;
};

struct Hierarchy {
  VectorField field;
  HierarchyLayout layout;
  Vec pack(const Vec& r, const Vec& x, const std::vector<Vec>& y_states) const;
};

/// Stacks (r, x, y₁, …) into one autonomous field with information flowing
/// only r → x → y.
Hierarchy compose_hierarchy(const ReferenceSystem& ref, const CanonicalSystem& canon,
                            const std::vector<TransformationSystem>& transforms);

// ---------------------------------------------------------------------------
// Diffeomorphic scaling
// ---------------------------------------------------------------------------

struct Diffeomorphism {
  int dim = 0;
  std::function<Vec(const Vec&)> forward;
  std::function<Vec(const Vec&)> inverse;
  std::function<Mat(const Vec&)> jacobian;
  /// Set for T(y) = linear·y + offset.
  std::optional<Mat> linear;

  static Diffeomorphism identity(int n);
  /// T(y) = s·R·y + y_T.
  static Diffeomorphism affine(double scale, const Mat& rotation, const Vec& translation);
};

/// τ(t)·ẏ' = J(y) f(y) evaluated at y = T⁻¹(y').
VectorField apply_diffeomorphism(const VectorField& field, const Diffeomorphism& T,
                                 std::function<double(double)> tau_fn = {});

}  // namespace sidmp::dynamics
