// Fixed-step RK4 integration with between-step mode switching, plus the
// trajectory measurements used throughout the project.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sidmp/types.hpp"

namespace sidmp::simulate {

struct Event {
  double time = 0.0;
  std::string id;
  bool operator==(const Event&) const = default;
};

using Mode = std::vector<std::uint8_t>;

/// A vector field whose right-hand side depends on a discrete mode.
///
/// The integrator evaluates `eval` with the mode frozen across a full RK4
/// step, then calls `update_mode` with the step endpoints. A mode change
/// therefore takes effect from the next step onward (one-step latency).
class SwitchedSystem {
 public:
  virtual ~SwitchedSystem() = default;
  virtual int dim() const = 0;
  virtual Mode initial_mode(double t0, const Vec& x0) const = 0;
  virtual Vec eval(double t, const Vec& x, const Mode& mode) const = 0;
  virtual void update_mode(double t_prev, const Vec& x_prev, double t, const Vec& x, Mode& mode,
                           std::vector<Event>& log) const = 0;
};

/// Additive disturbance w(t) with a known sup-norm.
class Disturbance {
 public:
  static Disturbance constant(Vec w);
  /// w(t) = amplitude · sin(2π·frequency·t + phase)
  static Disturbance sinusoid(Vec amplitude, double frequency, double phase = 0.0);
  /// Piecewise-constant with magnitude `bound` and a seeded random direction
  /// on every hold interval.
  static Disturbance random_piecewise(int dim, double bound, double hold, std::uint64_t seed);

  int dim() const { return static_cast<int>(base_.size()); }
  Vec operator()(double t) const;
  double sup_norm() const;

 private:
  enum class Kind { constant, sinusoid, random_piecewise };
  Kind kind_ = Kind::constant;
  Vec base_;
  double frequency_ = 0.0;
  double phase_ = 0.0;
  double bound_ = 0.0;
  double hold_ = 1.0;
  std::uint64_t seed_ = 0;
};

/// Sign change of `indicator` (positive inside) is logged as "<id>:enter" or
/// "<id>:exit" with a linearly interpolated crossing time.
struct RegionWatch {
  std::string id;
  std::function<double(const Vec&)> indicator;
};

struct IntegratorConfig {
  enum class Method { rk4 };
  Method method = Method::rk4;
  double step = 1e-3;
  double duration = 1.0;
  double t0 = 0.0;
  int record_stride = 1;
  std::optional<Disturbance> disturbance;
  std::vector<RegionWatch> watches;

  void validate() const;
};

struct Trajectory {
  using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<double> t;
  StateMatrix x;
  std::vector<Event> events;

  std::size_t size() const { return t.size(); }
  int dim() const { return static_cast<int>(x.cols()); }
  Vec state(std::size_t k) const { return x.row(static_cast<Eigen::Index>(k)).transpose(); }
  Vec final_state() const { return state(size() - 1); }
};

Trajectory integrate(const VectorField& field, const Vec& x0, const IntegratorConfig& config);
Trajectory integrate(const SwitchedSystem& system, const Vec& x0, const IntegratorConfig& config);

/// Hyperplane {x : normal·x = offset}; upward crossings after `t_min` count.
struct Section {
  Vec normal;
  double offset = 0.0;
  double t_min = 0.0;

  /// Plane x[index] = 0 crossed upward.
  static Section coordinate(int dim, int index, double t_min = 0.0);
};

struct PeriodEstimate {
  double period = 0.0;
  double max_deviation = 0.0;  // max |interval − mean|
  int crossings = 0;
};

std::vector<double> section_crossings(const Trajectory& traj, const Section& section);
PeriodEstimate estimate_period(const Trajectory& traj, const Section& section);

/// For each disturbed sample, the minimum distance to any nominal sample.
/// With a metric M the distance is |Θ(a − b)| for M = ΘᵀΘ.
std::vector<double> min_distance_to_orbit(const Trajectory& disturbed, const Trajectory& nominal,
                                          const std::optional<Mat>& metric = std::nullopt);

/// Same computation on raw point sets (rows are points).
std::vector<double> min_distance_to_points(const Trajectory::StateMatrix& queries,
                                           const Trajectory::StateMatrix& cloud,
                                           const std::optional<Mat>& metric = std::nullopt);

}  // namespace sidmp::simulate
