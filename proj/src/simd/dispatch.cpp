#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace sage::simd {
namespace {

#define SAGE_TABLE(ns, label)                                                                                  \
  KernelTable{label,          &ns::dot,                     &ns::sum_squares,       &ns::axpy,             \
              &ns::soft_threshold, &ns::thresholded_sum_squares, &ns::shrink_exceedance, &ns::gemv, &ns::gemv_t}

bool cpu_has_avx2() {
#if defined(SAGE_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  const char* forced = std::getenv("SAGE_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table = SAGE_TABLE(scalar, "scalar");
  return table;
}

const KernelTable* avx2_kernels() {
#if defined(SAGE_HAVE_AVX2_KERNELS)
  static const KernelTable table = SAGE_TABLE(avx2, "avx2");
  static const bool available = cpu_has_avx2();
  return available ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() {
  static const KernelTable& active = select();
  return active;
}

}  // namespace sage::simd
