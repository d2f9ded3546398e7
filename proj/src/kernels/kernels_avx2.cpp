// AVX2 variants of the hot element-wise kernels.
//
// The dither path mirrors dither_quantize_one operation for operation
// (add, sub, div, floor, max, min, mul, add, sub) and is bit-exact against
// the scalar reference; this file is compiled with contraction off so no FMA
// sneaks in. The TPS path evaluates log() with the classic rational-polynomial
// reduction; it lands within a few ulp of libm and the equivalence test pins
// the bound.

#include "dqedmd/kernels.hpp"

#include <immintrin.h>

#include <cfloat>
#include <cstdint>

namespace dqedmd::kernels::detail {

namespace {

// Mask with the low `rem` (1..3) lanes active.
inline __m256i tail_mask(std::size_t rem) {
  alignas(32) static const std::int64_t bits[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(
      reinterpret_cast<const __m256i*>(bits + (4 - rem)));
}

inline std::size_t popcount4(int mask) {
  return static_cast<std::size_t>(__builtin_popcount(
      static_cast<unsigned>(mask) & 0xFu));
}

std::size_t dither_quantize_avx2(const QuantCell& c, const double* x,
                                 const double* w, double* out, std::size_t n) {
  const __m256d u_min = _mm256_set1_pd(c.u_min);
  const __m256d eps = _mm256_set1_pd(c.eps);
  const __m256d offset = _mm256_set1_pd(c.offset);
  const __m256d code_max = _mm256_set1_pd(c.code_max);
  const __m256d zero = _mm256_setzero_pd();

  std::size_t saturated = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d wv = _mm256_loadu_pd(w + i);
    const __m256d t = _mm256_floor_pd(_mm256_div_pd(
        _mm256_sub_pd(_mm256_add_pd(xv, wv), u_min), eps));
    const __m256d tc = _mm256_min_pd(_mm256_max_pd(t, zero), code_max);
    saturated += popcount4(
        _mm256_movemask_pd(_mm256_cmp_pd(t, tc, _CMP_NEQ_OQ)));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(
        _mm256_add_pd(_mm256_mul_pd(eps, tc), offset), wv));
  }
  const std::size_t rem = n - i;
  if (rem != 0) {
    const __m256i m = tail_mask(rem);
    const __m256d xv = _mm256_maskload_pd(x + i, m);
    const __m256d wv = _mm256_maskload_pd(w + i, m);
    const __m256d t = _mm256_floor_pd(_mm256_div_pd(
        _mm256_sub_pd(_mm256_add_pd(xv, wv), u_min), eps));
    const __m256d tc = _mm256_min_pd(_mm256_max_pd(t, zero), code_max);
    const int sat_bits =
        _mm256_movemask_pd(_mm256_cmp_pd(t, tc, _CMP_NEQ_OQ)) &
        ((1 << rem) - 1);
    saturated += popcount4(sat_bits);
    _mm256_maskstore_pd(out + i, m, _mm256_sub_pd(
        _mm256_add_pd(_mm256_mul_pd(eps, tc), offset), wv));
  }
  return saturated;
}

// log(x) for normal positive doubles: split x = m * 2^e with m in
// (sqrt(2)/2, sqrt(2)], then log m via a rational polynomial in t = m - 1
// and recombine with e * ln 2 in two parts.
inline __m256d vlog(__m256d x) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sqrt2 = _mm256_set1_pd(1.41421356237309504880);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  const __m256i exp_magic = _mm256_set1_epi64x(0x4330000000000000LL);

  const __m256i bits = _mm256_castpd_si256(x);
  // biased exponent as a double via the 2^52 shift trick, then unbias
  const __m256i exp_bits = _mm256_srli_epi64(bits, 52);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(exp_bits, exp_magic)),
      _mm256_set1_pd(4503599627370496.0 + 1023.0));

  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  const __m256d big = _mm256_cmp_pd(m, sqrt2, _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, half), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, one));

  const __m256d t = _mm256_sub_pd(m, one);
  const __m256d z = _mm256_mul_pd(t, t);

  __m256d p = _mm256_set1_pd(1.01875663804580931796e-4);
  p = _mm256_add_pd(_mm256_mul_pd(p, t), _mm256_set1_pd(4.97494994976747001425e-1));
  p = _mm256_add_pd(_mm256_mul_pd(p, t), _mm256_set1_pd(4.70579119878881725854e0));
  p = _mm256_add_pd(_mm256_mul_pd(p, t), _mm256_set1_pd(1.44989225341610930846e1));
  p = _mm256_add_pd(_mm256_mul_pd(p, t), _mm256_set1_pd(1.79368678507819816313e1));
  p = _mm256_add_pd(_mm256_mul_pd(p, t), _mm256_set1_pd(7.70838733755885391666e0));

  __m256d q = _mm256_add_pd(t, _mm256_set1_pd(1.12873587189167450590e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, t), _mm256_set1_pd(4.52279145837532221105e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, t), _mm256_set1_pd(8.29875266912776603211e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, t), _mm256_set1_pd(7.11544750618563894466e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, t), _mm256_set1_pd(2.31251620126765340583e1));

  __m256d y = _mm256_mul_pd(_mm256_mul_pd(t, z), _mm256_div_pd(p, q));
  y = _mm256_sub_pd(y, _mm256_mul_pd(e, _mm256_set1_pd(2.121944400546905827679e-4)));
  y = _mm256_sub_pd(y, _mm256_mul_pd(half, z));
  __m256d r = _mm256_add_pd(t, y);
  r = _mm256_add_pd(r, _mm256_mul_pd(e, _mm256_set1_pd(0.693359375)));
  return r;
}

// Same value expression as the scalar kernel: (0.5 * r2) * log(r2), forced
// to +0 for r2 below the normal range.
inline __m256d tps_block(__m256d v, __m256d half, __m256d min_normal) {
  const __m256d res = _mm256_mul_pd(_mm256_mul_pd(half, v), vlog(v));
  const __m256d keep = _mm256_cmp_pd(v, min_normal, _CMP_GE_OQ);
  return _mm256_and_pd(res, keep);
}

void tps_values_avx2(const double* r2, double* out, std::size_t n) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d min_normal = _mm256_set1_pd(DBL_MIN);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     tps_block(_mm256_loadu_pd(r2 + i), half, min_normal));
  const std::size_t rem = n - i;
  if (rem != 0) {
    const __m256i m = tail_mask(rem);
    _mm256_maskstore_pd(out + i, m,
                        tps_block(_mm256_maskload_pd(r2 + i, m), half,
                                  min_normal));
  }
}

}  // namespace

const KernelSet& avx2_kernel_set() {
  static const KernelSet set{"avx2", &dither_quantize_avx2, &tps_values_avx2};
  return set;
}

}  // namespace dqedmd::kernels::detail
