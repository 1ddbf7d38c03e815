// AVX2 variants. This file is the only one compiled with -mavx2; nothing here
// may be called unless the dispatcher has confirmed CPU support.
#include "sidmp/kernels.hpp"

#if defined(SIDMP_BUILD_AVX2)

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace sidmp::kernels::detail {

void axpy_avx2(std::span<double> out, std::span<const double> x, double a,
               std::span<const double> k) {
  const std::size_t n = out.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x.data() + i);
    const __m256d vk = _mm256_loadu_pd(k.data() + i);
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(vx, _mm256_mul_pd(va, vk)));
  }
  for (; i < n; ++i) out[i] = x[i] + a * k[i];
}

void rk4_combine_avx2(std::span<double> out, std::span<const double> x, double h6,
                      std::span<const double> k1, std::span<const double> k2,
                      std::span<const double> k3, std::span<const double> k4) {
  const std::size_t n = out.size();
  const __m256d vh6 = _mm256_set1_pd(h6);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(k1.data() + i);
    const __m256d b = _mm256_loadu_pd(k2.data() + i);
    const __m256d c = _mm256_loadu_pd(k3.data() + i);
    const __m256d d = _mm256_loadu_pd(k4.data() + i);
    const __m256d inner =
        _mm256_add_pd(_mm256_add_pd(a, _mm256_mul_pd(two, _mm256_add_pd(b, c))), d);
    const __m256d vx = _mm256_loadu_pd(x.data() + i);
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(vx, _mm256_mul_pd(vh6, inner)));
  }
  for (; i < n; ++i) {
    const double inner = (k1[i] + 2.0 * (k2[i] + k3[i])) + k4[i];
    out[i] = x[i] + h6 * inner;
  }
}

bool all_finite_avx2(std::span<const double> x) {
  const std::size_t n = x.size();
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    // v - v is 0 for finite values and NaN for inf/NaN.
    const __m256d ok = _mm256_cmp_pd(_mm256_sub_pd(v, v), zero, _CMP_EQ_OQ);
    if (_mm256_movemask_pd(ok) != 0xF) return false;
  }
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void matvec_avx2(std::span<double> y, std::span<const double> a_rowmajor,
                 std::span<const double> x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a_rowmajor.data() + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(row + c),
                                             _mm256_loadu_pd(x.data() + c)));
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    double sum = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
    for (; c < cols; ++c) sum += row[c] * x[c];
    y[r] = sum;
  }
}

void hopf_interleaved_avx2(std::span<double> out, std::span<const double> x,
                           const HopfParamsSoa& p) {
  const std::size_t nodes = x.size() / 2;
  std::size_t i = 0;
  // Two nodes per register: lanes hold (x1_a, x2_a, x1_b, x2_b).
  for (; i + 2 <= nodes; i += 2) {
    const __m256d v = _mm256_loadu_pd(x.data() + 2 * i);
    const __m256d swapped = _mm256_permute_pd(v, 0b0101);
    const __m256d sq = _mm256_mul_pd(v, v);
    const __m256d r2 = _mm256_add_pd(sq, _mm256_permute_pd(sq, 0b0101));
    const auto spread = [](const double* src) {
      return _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(src)), 0x50);
    };
    const __m256d omega = spread(p.omega.data() + i);
    const __m256d rho = spread(p.rho.data() + i);
    const __m256d rsq = spread(p.radius_sq.data() + i);
    const __m256d inv_tau = spread(p.inv_tau.data() + i);
    const __m256d radial = _mm256_mul_pd(rho, _mm256_sub_pd(rsq, r2));
    const __m256d rot = _mm256_mul_pd(omega, swapped);
    const __m256d rad = _mm256_mul_pd(radial, v);
    // even lanes: rad + rot, odd lanes: rad - rot
    const __m256d sum = _mm256_addsub_pd(rad, _mm256_sub_pd(_mm256_setzero_pd(), rot));
    _mm256_storeu_pd(out.data() + 2 * i, _mm256_mul_pd(sum, inv_tau));
  }
  for (; i < nodes; ++i) {
    const double x1 = x[2 * i];
    const double x2 = x[2 * i + 1];
    const double radial = p.rho[i] * (p.radius_sq[i] - (x1 * x1 + x2 * x2));
    out[2 * i] = (p.omega[i] * x2 + radial * x1) * p.inv_tau[i];
    out[2 * i + 1] = (radial * x2 - p.omega[i] * x1) * p.inv_tau[i];
  }
}

double min_sq_distance_avx2(std::span<const double> query,
                            std::span<const std::span<const double>> cloud_columns,
                            std::span<const double> weights) {
  const std::size_t dims = query.size();
  const std::size_t count = dims == 0 ? 0 : cloud_columns[0].size();
  double best = std::numeric_limits<double>::infinity();
  __m256d vbest = _mm256_set1_pd(best);
  std::size_t j = 0;
  for (; j + 4 <= count; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dims; ++d) {
      const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(query[d]),
                                         _mm256_loadu_pd(cloud_columns[d].data() + j));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(weights[d]),
                                             _mm256_mul_pd(diff, diff)));
    }
    vbest = _mm256_min_pd(vbest, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vbest);
  for (double l : lanes)
    if (l < best) best = l;
  for (; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = query[d] - cloud_columns[d][j];
      acc += weights[d] * (diff * diff);
    }
    if (acc < best) best = acc;
  }
  return best;
}

}  // namespace sidmp::kernels::detail

#endif
