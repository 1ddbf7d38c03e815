#include "sidmp/region.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace sidmp {

namespace {

constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

Vec shift_for(std::uint64_t seed, int dim) {
  Vec s = Vec::Zero(dim);
  if (seed == 0) return s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < dim; ++i) s[i] = u(rng);
  return s;
}

Vec unit_point(std::uint64_t index, int dim, const Vec& shift) {
  Vec u = halton(index + 1, dim) + shift;
  for (int i = 0; i < dim; ++i) u[i] -= std::floor(u[i]);
  return u;
}

}  // namespace

Vec halton(std::uint64_t index, int dim) {
  if (dim <= 0 || dim > static_cast<int>(kPrimes.size()))
    throw DimensionError("halton sequence supports 1.." + std::to_string(kPrimes.size()) +
                         " dimensions");
  Vec v(dim);
  for (int d = 0; d < dim; ++d) v[d] = radical_inverse(index, kPrimes[static_cast<std::size_t>(d)]);
  return v;
}

RegionSampler RegionSampler::box(Vec lower, Vec upper, int count, std::uint64_t seed) {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw DimensionError("box bounds must be non-empty and of equal dimension");
  if (((upper - lower).array() < 0.0).any()) throw ParameterError("box upper bound below lower bound");
  if (count < 1) throw ParameterError("sample count must be positive");
  RegionSampler s;
  s.kind_ = Kind::box;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  s.count_ = count;
  s.seed_ = seed;
  return s;
}

RegionSampler RegionSampler::annulus(double inner, double outer, int count, std::uint64_t seed,
                                     Vec center) {
  if (!(inner >= 0.0) || !(outer > inner)) throw ParameterError("annulus needs 0 <= inner < outer");
  if (center.size() != 2) throw DimensionError("annulus is planar");
  if (count < 1) throw ParameterError("sample count must be positive");
  RegionSampler s;
  s.kind_ = Kind::annulus;
  s.inner_ = inner;
  s.outer_ = outer;
  s.center_ = std::move(center);
  s.count_ = count;
  s.seed_ = seed;
  return s;
}

RegionSampler RegionSampler::ball(Vec center, double radius, int count, std::uint64_t seed) {
  if (center.size() == 0) throw DimensionError("ball centre must be non-empty");
  if (!(radius > 0.0)) throw ParameterError("ball radius must be positive");
  if (count < 1) throw ParameterError("sample count must be positive");
  RegionSampler s;
  s.kind_ = Kind::ball;
  s.center_ = std::move(center);
  s.outer_ = radius;
  s.count_ = count;
  s.seed_ = seed;
  return s;
}

RegionSampler RegionSampler::points(std::vector<Vec> pts) {
  if (pts.empty()) throw ParameterError("point region needs at least one point");
  for (const Vec& p : pts)
    if (p.size() != pts.front().size()) throw DimensionError("point region has mixed dimensions");
  RegionSampler s;
  s.kind_ = Kind::points;
  s.count_ = static_cast<int>(pts.size());
  s.points_ = std::move(pts);
  return s;
}

RegionSampler RegionSampler::with_count(int count) const {
  if (kind_ == Kind::points) return *this;
  if (count < 1) throw ParameterError("sample count must be positive");
  RegionSampler s = *this;
  s.count_ = count;
  return s;
}

int RegionSampler::dim() const {
  switch (kind_) {
    case Kind::box: return static_cast<int>(lower_.size());
    case Kind::annulus: return 2;
    case Kind::ball: return static_cast<int>(center_.size());
    case Kind::points: return static_cast<int>(points_.front().size());
  }
  return 0;
}

std::string RegionSampler::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::box: os << "box(dim=" << dim() << ")"; break;
    case Kind::annulus: os << "annulus(" << inner_ << "," << outer_ << ")"; break;
    case Kind::ball: os << "ball(dim=" << dim() << ",radius=" << outer_ << ")"; break;
    case Kind::points: os << "points"; break;
  }
  os << "[" << count_ << "]";
  return os.str();
}

bool RegionSampler::contains(const Vec& x, double tol) const {
  if (x.size() != dim()) return false;
  switch (kind_) {
    case Kind::box:
      return ((x - lower_).array() >= -tol).all() && ((upper_ - x).array() >= -tol).all();
    case Kind::annulus: {
      const double r = (x - center_).norm();
      return r >= inner_ - tol && r <= outer_ + tol;
    }
    case Kind::ball: return (x - center_).norm() <= outer_ + tol;
    case Kind::points:
      for (const Vec& p : points_)
        if ((p - x).norm() <= tol) return true;
      return false;
  }
  return false;
}

std::vector<Vec> RegionSampler::samples() const {
  if (kind_ == Kind::points) return points_;
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count_));
  const int n = dim();
  switch (kind_) {
    case Kind::box: {
      const Vec shift = shift_for(seed_, n);
      for (int i = 0; i < count_; ++i) {
        const Vec u = unit_point(static_cast<std::uint64_t>(i), n, shift);
        out.push_back(lower_ + (upper_ - lower_).cwiseProduct(u));
      }
      break;
    }
    case Kind::annulus: {
      // Area-uniform polar map of the unit square.
      const Vec shift = shift_for(seed_, 2);
      const double a2 = inner_ * inner_, b2 = outer_ * outer_;
      for (int i = 0; i < count_; ++i) {
        const Vec u = unit_point(static_cast<std::uint64_t>(i), 2, shift);
        const double r = std::sqrt(a2 + u[0] * (b2 - a2));
        const double th = 2.0 * std::numbers::pi * u[1];
        Vec p(2);
        p << r * std::cos(th), r * std::sin(th);
        out.push_back(center_ + p);
      }
      break;
    }
    case Kind::ball: {
      out.push_back(center_);
      const Vec shift = shift_for(seed_, n);
      if (n == 2) {
        for (int i = 1; i < count_; ++i) {
          const Vec u = unit_point(static_cast<std::uint64_t>(i), 2, shift);
          const double r = outer_ * std::sqrt(u[0]);
          const double th = 2.0 * std::numbers::pi * u[1];
          Vec p(2);
          p << r * std::cos(th), r * std::sin(th);
          out.push_back(center_ + p);
        }
      } else {
        // Rejection from the bounding cube.
        std::uint64_t idx = 0;
        while (static_cast<int>(out.size()) < count_) {
          const Vec u = unit_point(idx++, n, shift);
          const Vec p = (2.0 * u.array() - 1.0).matrix();
          if (p.squaredNorm() <= 1.0) out.push_back(center_ + outer_ * p);
        }
      }
      break;
    }
    case Kind::points: break;
  }
  return out;
}

std::vector<Vec> circle_points(int count, double radius, const Vec& center) {
  if (count < 1) throw ParameterError("circle point count must be positive");
  if (center.size() != 2) throw DimensionError("circle centre must be planar");
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    const double th = 2.0 * std::numbers::pi * i / count;
    Vec p(2);
    p << radius * std::cos(th), radius * std::sin(th);
    out.push_back(center + p);
  }
  return out;
}

}  // namespace sidmp
