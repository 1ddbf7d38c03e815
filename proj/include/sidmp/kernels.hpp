// Data-parallel inner loops with a scalar reference and AVX2 variants.
//
// Every kernel has a `*_scalar` reference implementation; the AVX2 builds
// mirror the scalar operation order so that elementwise kernels agree
// bit-for-bit. Reductions (dot products, minima) may differ in the last ulp
// because lanes are combined in a different order.
//
// The active table is chosen once per process from the CPU feature flags.
// Setting SIDMP_SIMD=scalar in the environment forces the reference path.
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace sidmp::kernels {

enum class Isa { scalar, avx2 };

/// Per-node Hopf parameters in structure-of-arrays layout.
struct HopfParamsSoa {
  std::span<const double> omega;
  std::span<const double> rho;
  std::span<const double> radius_sq;
  std::span<const double> inv_tau;
};

struct KernelTable {
  Isa isa;
  // out[i] = x[i] + a * k[i]
  void (*axpy)(std::span<double> out, std::span<const double> x, double a,
               std::span<const double> k);
  // out[i] = x[i] + h6 * (k1[i] + 2 * (k2[i] + k3[i]) + k4[i])
  void (*rk4_combine)(std::span<double> out, std::span<const double> x, double h6,
                      std::span<const double> k1, std::span<const double> k2,
                      std::span<const double> k3, std::span<const double> k4);
  bool (*all_finite)(std::span<const double> x);
  // y = A x for a dense row-major rows x cols matrix.
  void (*matvec)(std::span<double> y, std::span<const double> a_rowmajor,
                 std::span<const double> x, std::size_t rows, std::size_t cols);
  // Hopf right-hand side for interleaved node states (x1, x2, x1, x2, ...).
  void (*hopf_interleaved)(std::span<double> out, std::span<const double> x,
                           const HopfParamsSoa& p);
  // min_j sum_d (q[d] - cloud_d[j])^2 over a point cloud given per dimension.
  double (*min_sq_distance)(std::span<const double> query,
                            std::span<const std::span<const double>> cloud_columns,
                            std::span<const double> weights);
};

const KernelTable& active();
const KernelTable& scalar_table();
/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

std::string_view isa_name(Isa isa);

// Scalar reference implementations, exposed for equivalence testing.
void axpy_scalar(std::span<double> out, std::span<const double> x, double a,
                 std::span<const double> k);
void rk4_combine_scalar(std::span<double> out, std::span<const double> x, double h6,
                        std::span<const double> k1, std::span<const double> k2,
                        std::span<const double> k3, std::span<const double> k4);
bool all_finite_scalar(std::span<const double> x);
void matvec_scalar(std::span<double> y, std::span<const double> a_rowmajor,
                   std::span<const double> x, std::size_t rows, std::size_t cols);
void hopf_interleaved_scalar(std::span<double> out, std::span<const double> x,
                             const HopfParamsSoa& p);
double min_sq_distance_scalar(std::span<const double> query,
                              std::span<const std::span<const double>> cloud_columns,
                              std::span<const double> weights);

}  // namespace sidmp::kernels
