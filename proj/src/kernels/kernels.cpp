#include "dqedmd/kernels.hpp"

#include <cfloat>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace dqedmd::kernels {

namespace {

std::size_t dither_quantize_scalar(const QuantCell& c, const double* x,
                                   const double* w, double* out,
                                   std::size_t n) {
  std::size_t saturated = 0;
  for (std::size_t i = 0; i < n; ++i)
    out[i] = dither_quantize_one(c, x[i], w[i], saturated);
  return saturated;
}

void tps_values_scalar(const double* r2, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = r2[i];
    out[i] = (v < DBL_MIN) ? 0.0 : 0.5 * v * std::log(v);
  }
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{"scalar", &dither_quantize_scalar,
                             &tps_values_scalar};
  return set;
}

#if defined(DQEDMD_BUILD_AVX2)
namespace detail {
const KernelSet& avx2_kernel_set();
}

const KernelSet* avx2_kernels() {
  static const KernelSet* set =
      __builtin_cpu_supports("avx2") ? &detail::avx2_kernel_set() : nullptr;
  return set;
}
#else
const KernelSet* avx2_kernels() { return nullptr; }
#endif

const KernelSet& active_kernels() {
  // Re-read the environment on every call so tests can flip the override;
  // getenv is cheap next to any batched kernel invocation.
  const char* pick = std::getenv("DQEDMD_KERNELS");
  if (pick != nullptr && *pick != '\0') {
    if (std::strcmp(pick, "scalar") == 0) return scalar_kernels();
    if (std::strcmp(pick, "avx2") == 0) {
      const KernelSet* set = avx2_kernels();
      if (set == nullptr)
        throw std::runtime_error(
            "DQEDMD_KERNELS=avx2 requested but AVX2 is unavailable on this "
            "host or build");
      return *set;
    }
    throw std::runtime_error(std::string("unknown DQEDMD_KERNELS value: ") +
                             pick);
  }
  const KernelSet* set = avx2_kernels();
  return set != nullptr ? *set : scalar_kernels();
}

}  // namespace dqedmd::kernels
