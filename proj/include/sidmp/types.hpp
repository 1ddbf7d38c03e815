#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace sidmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure the library reports derives from Error so
// the CLI can map it to a machine-readable kind.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error("parameter", w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};
struct DegenerateBasisError : Error {
  explicit DegenerateBasisError(const std::string& w) : Error("degenerate_basis", w) {}
};
struct NotPeriodicError : Error {
  explicit NotPeriodicError(const std::string& w) : Error("not_periodic", w) {}
};
struct ConditioningError : Error {
  explicit ConditioningError(const std::string& w) : Error("conditioning", w) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error("precondition", w) {}
};
struct BuildFailure : Error {
  explicit BuildFailure(const std::string& w) : Error("build_failure", w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error("validation", w) {}
};

struct DivergenceError : Error {
  DivergenceError(const std::string& w, double last_valid_time)
      : Error("divergence", w), last_valid_time(last_valid_time) {}
  double last_valid_time;
};

/// Right-hand side of ẋ = f(t, x) with an optional analytic Jacobian.
///
/// Evaluation is pure; a VectorField can be shared between threads. When no
/// Jacobian is supplied, `jacobian` falls back to central differences with
/// step 1e-6·(1+|x_i|) per coordinate.
class VectorField {
 public:
  using Eval = std::function<Vec(double t, const Vec& x)>;
  using Jacobian = std::function<Mat(double t, const Vec& x)>;

  VectorField() = default;
  VectorField(int dim, Eval f, Jacobian jac = {});

  int dim() const { return dim_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jac_); }

  Vec operator()(double t, const Vec& x) const;
  Vec operator()(const Vec& x) const { return (*this)(0.0, x); }

  Mat jacobian(double t, const Vec& x) const;
  Mat jacobian(const Vec& x) const { return jacobian(0.0, x); }

  /// Same field with the analytic Jacobian dropped (forces finite differences).
  VectorField without_jacobian() const { return VectorField(dim_, f_); }

 private:
  int dim_ = 0;
  Eval f_;
  Jacobian jac_;
};

/// Central-difference Jacobian of an arbitrary map.
Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x);

/// Rotation of the plane by `angle` (counter-clockwise).
Eigen::Matrix2d rotation2(double angle);

}  // namespace sidmp
