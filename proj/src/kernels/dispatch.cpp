#include <cstdlib>
#include <string_view>

#include "sidmp/kernels.hpp"

namespace sidmp::kernels {

#if defined(SIDMP_BUILD_AVX2)
namespace detail {
void axpy_avx2(std::span<double>, std::span<const double>, double, std::span<const double>);
void rk4_combine_avx2(std::span<double>, std::span<const double>, double,
                      std::span<const double>, std::span<const double>,
                      std::span<const double>, std::span<const double>);
bool all_finite_avx2(std::span<const double>);
void matvec_avx2(std::span<double>, std::span<const double>, std::span<const double>,
                 std::size_t, std::size_t);
void hopf_interleaved_avx2(std::span<double>, std::span<const double>, const HopfParamsSoa&);
double min_sq_distance_avx2(std::span<const double>,
                            std::span<const std::span<const double>>,
                            std::span<const double>);
}  // namespace detail
#endif

namespace {

constexpr KernelTable kScalar{
    Isa::scalar,       axpy_scalar,          rk4_combine_scalar,    all_finite_scalar,
    matvec_scalar,     hopf_interleaved_scalar, min_sq_distance_scalar,
};

#if defined(SIDMP_BUILD_AVX2)
constexpr KernelTable kAvx2{
    Isa::avx2,           detail::axpy_avx2,   detail::rk4_combine_avx2,
    detail::all_finite_avx2, detail::matvec_avx2, detail::hopf_interleaved_avx2,
    detail::min_sq_distance_avx2,
};
#endif

bool cpu_has_avx2() {
#if defined(SIDMP_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* forced = std::getenv("SIDMP_SIMD")) {
    if (std::string_view(forced) == "scalar") return kScalar;
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(SIDMP_BUILD_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace sidmp::kernels
