#pragma once

#include <cmath>
#include <cstddef>

namespace dqedmd::kernels {

// Cell geometry of one uniform quantizer, precomputed so the scalar and SIMD
// paths consume identical operand values. offset = u_min + 0.5 * eps,
// code_max = 2^b - 1.
struct QuantCell {
  double u_min;
  double eps;
  double offset;
  double code_max;
};

// out[i] = decode(encode(x[i] + w[i])) - w[i] with saturating encode and
// mid-point decode. Returns the number of saturated samples.
using DitherQuantizeFn = std::size_t (*)(const QuantCell&, const double* x,
                                         const double* w, double* out,
                                         std::size_t n);

// out[i] = 0.5 * r2[i] * log(r2[i])  (== r^2 log r), with 0 for r2 below the
// normal floating-point range, which covers the r = 0 limit.
using TpsValuesFn = void (*)(const double* r2, double* out, std::size_t n);

struct KernelSet {
  const char* name;
  DitherQuantizeFn dither_quantize;
  TpsValuesFn tps_values;
};

// Scalar reference implementation.
const KernelSet& scalar_kernels();

// AVX2 variant, or nullptr when the build or the running CPU lacks it.
const KernelSet* avx2_kernels();

// Preferred set for this process. Setting DQEDMD_KERNELS=scalar|avx2 in the
// environment forces the choice; forcing avx2 on an unsupported host throws.
const KernelSet& active_kernels();

// Single-element dither quantization. The batched kernels reproduce this
// exact operation sequence, keeping module-level scalar code bit-identical
// to the vector paths (max-then-min clamp, division by eps, offset add).
inline double dither_quantize_one(const QuantCell& c, double x, double w,
                                  std::size_t& saturated) {
  double t = std::floor((x + w - c.u_min) / c.eps);
  double tc = t;
  if (tc < 0.0) tc = 0.0;
  if (tc > c.code_max) tc = c.code_max;
  if (t != tc) ++saturated;
  return c.eps * tc + c.offset - w;
}

}  // namespace dqedmd::kernels
