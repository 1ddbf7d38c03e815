// Low-discrepancy samplers over the regions used by the certificates.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sidmp/types.hpp"

namespace sidmp {

/// Box, annulus, ball or explicit point list.
///
/// Samples come from a Halton sequence with a seeded Cranley-Patterson
/// rotation, so a (region, count, seed) triple always yields the same points.
/// Annuli are planar and centred at `center`; balls may have any dimension
/// and always include their centre as the first sample.
class RegionSampler {
 public:
  enum class Kind { box, annulus, ball, points };

  static RegionSampler box(Vec lower, Vec upper, int count = 4096, std::uint64_t seed = 0);
  static RegionSampler annulus(double inner, double outer, int count = 4096,
                               std::uint64_t seed = 0, Vec center = Vec::Zero(2));
  static RegionSampler ball(Vec center, double radius, int count = 4096, std::uint64_t seed = 0);
  static RegionSampler points(std::vector<Vec> pts);

  Kind kind() const { return kind_; }
  int dim() const;
  int count() const { return count_; }
  std::string describe() const;

  bool contains(const Vec& x, double tol = 1e-12) const;
  std::vector<Vec> samples() const;

  /// Same region with a different sample count.
  RegionSampler with_count(int count) const;

  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Vec& center() const { return center_; }
  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }

 private:
  Kind kind_ = Kind::box;
  Vec lower_, upper_, center_;
  double inner_ = 0.0, outer_ = 0.0;
  int count_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Vec> points_;
};

/// `count` points evenly spaced on the circle of radius `radius` about `center`.
std::vector<Vec> circle_points(int count, double radius, const Vec& center = Vec::Zero(2));

/// Element `index` of the Halton sequence in `dim` dimensions (unit cube).
Vec halton(std::uint64_t index, int dim);

}  // namespace sidmp
