#include "sidmp/kernels.hpp"

#include <cmath>
#include <limits>

namespace sidmp::kernels {

void axpy_scalar(std::span<double> out, std::span<const double> x, double a,
                 std::span<const double> k) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * k[i];
}

void rk4_combine_scalar(std::span<double> out, std::span<const double> x, double h6,
                        std::span<const double> k1, std::span<const double> k2,
                        std::span<const double> k3, std::span<const double> k4) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double inner = (k1[i] + 2.0 * (k2[i] + k3[i])) + k4[i];
    out[i] = x[i] + h6 * inner;
  }
}

bool all_finite_scalar(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void matvec_scalar(std::span<double> y, std::span<const double> a_rowmajor,
                   std::span<const double> x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a_rowmajor.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void hopf_interleaved_scalar(std::span<double> out, std::span<const double> x,
                             const HopfParamsSoa& p) {
  const std::size_t nodes = x.size() / 2;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x1 = x[2 * i];
    const double x2 = x[2 * i + 1];
    const double radial = p.rho[i] * (p.radius_sq[i] - (x1 * x1 + x2 * x2));
    out[2 * i] = (p.omega[i] * x2 + radial * x1) * p.inv_tau[i];
    out[2 * i + 1] = (radial * x2 - p.omega[i] * x1) * p.inv_tau[i];
  }
}

double min_sq_distance_scalar(std::span<const double> query,
                              std::span<const std::span<const double>> cloud_columns,
                              std::span<const double> weights) {
  const std::size_t dims = query.size();
  const std::size_t count = dims == 0 ? 0 : cloud_columns[0].size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = query[d] - cloud_columns[d][j];
      acc += weights[d] * (diff * diff);
    }
    if (acc < best) best = acc;
  }
  return best;
}

}  // namespace sidmp::kernels
