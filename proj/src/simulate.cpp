#include "sidmp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sidmp/kernels.hpp"

namespace sidmp::simulate {

// ---------------------------------------------------------------------------
// Disturbances
// ---------------------------------------------------------------------------

Disturbance Disturbance::constant(Vec w) {
  Disturbance d;
  d.kind_ = Kind::constant;
  d.base_ = std::move(w);
  return d;
}

Disturbance Disturbance::sinusoid(Vec amplitude, double frequency, double phase) {
  Disturbance d;
  d.kind_ = Kind::sinusoid;
  d.base_ = std::move(amplitude);
  d.frequency_ = frequency;
  d.phase_ = phase;
  return d;
}

Disturbance Disturbance::random_piecewise(int dim, double bound, double hold, std::uint64_t seed) {
  if (dim <= 0) throw DimensionError("disturbance dimension must be positive");
  if (!(bound >= 0.0) || !(hold > 0.0))
    throw ParameterError("random disturbance needs bound >= 0 and hold > 0");
  Disturbance d;
  d.kind_ = Kind::random_piecewise;
  d.base_ = Vec::Zero(dim);
  d.bound_ = bound;
  d.hold_ = hold;
  d.seed_ = seed;
  return d;
}

Vec Disturbance::operator()(double t) const {
  switch (kind_) {
    case Kind::constant: return base_;
    case Kind::sinusoid:
      return base_ * std::sin(2.0 * M_PI * frequency_ * t + phase_);
    case Kind::random_piecewise: {
      const auto interval = static_cast<std::uint64_t>(std::max(0.0, std::floor(t / hold_)));
      std::mt19937_64 rng(seed_ ^ (interval * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
      std::normal_distribution<double> normal(0.0, 1.0);
      Vec dir(base_.size());
      do {
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
      } while (dir.norm() < 1e-12);
      return bound_ * dir / dir.norm();
    }
  }
  return base_;
}

double Disturbance::sup_norm() const {
  switch (kind_) {
    case Kind::constant:
    case Kind::sinusoid: return base_.norm();
    case Kind::random_piecewise: return bound_;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError("integrator step must be positive");
  if (!(duration >= step)) throw ParameterError("integrator duration must be at least one step");
  if (record_stride < 1) throw ParameterError("record stride must be >= 1");
}

namespace {

class PlainSystem final : public SwitchedSystem {
 public:
  explicit PlainSystem(const VectorField& f) : f_(f) {}
  int dim() const override { return f_.dim(); }
  Mode initial_mode(double, const Vec&) const override { return {}; }
  Vec eval(double t, const Vec& x, const Mode&) const override { return f_(t, x); }
  void update_mode(double, const Vec&, double, const Vec&, Mode&,
                   std::vector<Event>&) const override {}

 private:
  const VectorField& f_;
};

std::span<double> mut(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> view(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double crossing_time(double t0, double h0, double t1, double h1) {
  const double denom = h0 - h1;
  if (denom == 0.0) return t1;
  return t0 + (t1 - t0) * (h0 / denom);
}

}  // namespace

Trajectory integrate(const VectorField& field, const Vec& x0, const IntegratorConfig& config) {
  return integrate(PlainSystem(field), x0, config);
}

Trajectory integrate(const SwitchedSystem& system, const Vec& x0, const IntegratorConfig& config) {
  config.validate();
  const int n = system.dim();
  if (x0.size() != n) throw DimensionError("initial state dimension differs from the field");
  if (!x0.allFinite()) throw DomainError("initial state must be finite");
  if (config.disturbance && config.disturbance->dim() != n)
    throw DimensionError("disturbance dimension differs from the field");

  const kernels::KernelTable& k = kernels::active();
  const auto steps =
      static_cast<std::size_t>(std::ceil(config.duration / config.step - 1e-9));
  const double t_end = config.t0 + config.duration;
  auto time_at = [&](std::size_t i) {
    return i == steps ? t_end : config.t0 + static_cast<double>(i) * config.step;
  };

  const std::size_t stride = static_cast<std::size_t>(config.record_stride);
  const std::size_t records = steps / stride + 1 + (steps % stride != 0 ? 1 : 0);
  Trajectory traj;
  traj.t.reserve(records);
  traj.x.resize(static_cast<Eigen::Index>(records), n);
  std::size_t row = 0;
  auto record = [&](double t, const Vec& x) {
    traj.t.push_back(t);
    traj.x.row(static_cast<Eigen::Index>(row++)) = x.transpose();
  };

  auto rhs = [&](double t, const Vec& x, const Mode& mode) {
    Vec d = system.eval(t, x, mode);
    if (config.disturbance) d += (*config.disturbance)(t);
    return d;
  };

  Mode mode = system.initial_mode(config.t0, x0);
  Vec x = x0;
  Vec next(n), tmp(n);
  std::vector<double> watch_prev;
  for (const auto& w : config.watches) watch_prev.push_back(w.indicator(x0));

  record(config.t0, x);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = time_at(i);
    const double t1 = time_at(i + 1);
    const double h = t1 - t;

    const Vec k1 = rhs(t, x, mode);
    k.axpy(mut(tmp), view(x), 0.5 * h, view(k1));
    const Vec k2 = rhs(t + 0.5 * h, tmp, mode);
    k.axpy(mut(tmp), view(x), 0.5 * h, view(k2));
    const Vec k3 = rhs(t + 0.5 * h, tmp, mode);
    k.axpy(mut(tmp), view(x), h, view(k3));
    const Vec k4 = rhs(t1, tmp, mode);
    k.rk4_combine(mut(next), view(x), h / 6.0, view(k1), view(k2), view(k3), view(k4));

    if (!k.all_finite(view(next)))
      throw DivergenceError("non-finite state after t=" + std::to_string(t), t);

    system.update_mode(t, x, t1, next, mode, traj.events);
    for (std::size_t w = 0; w < config.watches.size(); ++w) {
      const double cur = config.watches[w].indicator(next);
      const double prev = watch_prev[w];
      if ((prev <= 0.0) != (cur <= 0.0)) {
        const std::string suffix = cur > 0.0 ? ":enter" : ":exit";
        traj.events.push_back({crossing_time(t, prev, t1, cur), config.watches[w].id + suffix});
      }
      watch_prev[w] = cur;
    }

    x.swap(next);
    if ((i + 1) % stride == 0 || i + 1 == steps) record(t1, x);
  }
  traj.x.conservativeResize(static_cast<Eigen::Index>(row), n);
  return traj;
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

Section Section::coordinate(int dim, int index, double t_min) {
  if (index < 0 || index >= dim) throw DimensionError("section coordinate out of range");
  Section s;
  s.normal = Vec::Zero(dim);
  s.normal[index] = 1.0;
  s.t_min = t_min;
  return s;
}

std::vector<double> section_crossings(const Trajectory& traj, const Section& section) {
  if (section.normal.size() != traj.dim())
    throw DimensionError("section normal dimension differs from the trajectory");
  std::vector<double> out;
  if (traj.size() < 2) return out;
  const Vec signed_dist = traj.x * section.normal - Vec::Constant(traj.x.rows(), section.offset);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    if (traj.t[i] < section.t_min) continue;
    const double a = signed_dist[static_cast<Eigen::Index>(i)];
    const double b = signed_dist[static_cast<Eigen::Index>(i + 1)];
    if (a < 0.0 && b >= 0.0) out.push_back(crossing_time(traj.t[i], a, traj.t[i + 1], b));
  }
  return out;
}

PeriodEstimate estimate_period(const Trajectory& traj, const Section& section) {
  const std::vector<double> c = section_crossings(traj, section);
  if (c.size() < 3)
    throw NotPeriodicError("only " + std::to_string(c.size()) +
                           " section crossings found; at least 3 are needed");
  PeriodEstimate est;
  est.crossings = static_cast<int>(c.size());
  est.period = (c.back() - c.front()) / static_cast<double>(c.size() - 1);
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    est.max_deviation = std::max(est.max_deviation, std::abs((c[i + 1] - c[i]) - est.period));
  return est;
}

std::vector<double> min_distance_to_points(const Trajectory::StateMatrix& queries,
                                           const Trajectory::StateMatrix& cloud,
                                           const std::optional<Mat>& metric) {
  if (queries.rows() == 0 || cloud.rows() == 0)
    throw PreconditionError("orbit distance needs non-empty trajectories");
  if (queries.cols() != cloud.cols()) throw DimensionError("trajectory dimensions differ");
  const Eigen::Index n = cloud.cols();

  Mat theta = Mat::Identity(n, n);
  if (metric) {
    if (metric->rows() != n || metric->cols() != n)
      throw DimensionError("metric dimension differs from the trajectories");
    Eigen::LLT<Mat> llt(*metric);
    if (llt.info() != Eigen::Success) throw DomainError("metric must be positive definite");
    theta = llt.matrixU();
  }
  // Column-major copy gives one contiguous array per dimension.
  const Mat cloud_t = cloud * theta.transpose();
  const Mat query_t = queries * theta.transpose();
  std::vector<std::span<const double>> columns;
  for (Eigen::Index d = 0; d < n; ++d)
    columns.emplace_back(cloud_t.col(d).data(), static_cast<std::size_t>(cloud_t.rows()));
  const std::vector<double> weights(static_cast<std::size_t>(n), 1.0);

  const auto& k = kernels::active();
  std::vector<double> out(static_cast<std::size_t>(queries.rows()));
  Vec q(n);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    q = query_t.row(i).transpose();
    out[static_cast<std::size_t>(i)] =
        std::sqrt(k.min_sq_distance(std::span<const double>(q.data(), q.size()), columns, weights));
  }
  return out;
}

std::vector<double> min_distance_to_orbit(const Trajectory& disturbed, const Trajectory& nominal,
                                          const std::optional<Mat>& metric) {
  return min_distance_to_points(disturbed.x, nominal.x, metric);
}

}  // namespace sidmp::simulate
