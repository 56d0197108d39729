// AVX2+FMA variants of the assembly kernels.  This translation unit is the
// only one compiled with -mavx2 -mfma; callers reach it through the dispatch
// table so the rest of the build stays at the baseline ISA.

#include "mixkrig/simd.hpp"

#if defined(MIXKRIG_HAVE_AVX2)

#include <immintrin.h>

namespace mixkrig::simd {
namespace {

void sqdist_accum_avx2(double* acc, const double* col, double center, double w, std::size_t n) {
  const __m256d c = _mm256_set1_pd(center);
  const __m256d wv = _mm256_set1_pd(w);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(col + k), c);
    const __m256d a = _mm256_loadu_pd(acc + k);
    _mm256_storeu_pd(acc + k, _mm256_fmadd_pd(_mm256_mul_pd(wv, d), d, a));
  }
  for (; k < n; ++k) {
    const double d = col[k] - center;
    acc[k] += w * d * d;
  }
}

// exp(x) for x in [-700, 0]: x = k*ln2 + r with |r| <= ln2/2, then a
// degree-13 polynomial for exp(r) and an exponent-field build for 2^k.
// Relative error vs std::exp is a few ulp; equivalence tests pin 1e-14.
constexpr double kLog2E = 1.4426950408889634074;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

inline __m256d exp_neg_core(__m256d t) {
  const __m256d x = _mm256_sub_pd(_mm256_setzero_pd(), t);
  const __m256d kf =
      _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2E)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(kf, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(kf, _mm256_set1_pd(kLn2Lo), r);

  // Horner over 1/i!, i = 13 .. 0.
  __m256d p = _mm256_set1_pd(1.6059043836821614599e-10);              // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.0876756987868098979e-09));  // 1/12!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441718775e-08));  // 1/11!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985890653e-07));  // 1/10!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985892511e-06));  // 1/9!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587301566e-05));  // 1/8!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841253e-04));  // 1/7!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888889418e-03));  // 1/6!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333332177e-03));  // 1/5!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664354e-02));  // 1/4!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666665741e-01));  // 1/3!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(5.0e-01));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^k via the exponent field; k in [-1010, 0] so k + 1023 stays normal.
  const __m128i k32 = _mm256_cvtpd_epi32(kf);
  const __m256i k64 = _mm256_cvtepi32_epi64(k32);
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  const __m256d scale = _mm256_castsi256_pd(bits);
  __m256d result = _mm256_mul_pd(p, scale);

  // Flush t >= 700 to zero (matches the scalar reference contract).
  const __m256d live = _mm256_cmp_pd(t, _mm256_set1_pd(700.0), _CMP_LT_OQ);
  return _mm256_and_pd(result, live);
}

void exp_neg_avx2(double* out, const double* t, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) _mm256_storeu_pd(out + k, exp_neg_core(_mm256_loadu_pd(t + k)));
  for (; k < n; ++k) out[k] = exp_neg_scalar(t[k]);
}

void mul_exp_neg_avx2(double* out, const double* q, const double* acc, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d e = exp_neg_core(_mm256_loadu_pd(acc + k));
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(q + k), e));
  }
  for (; k < n; ++k) out[k] = q[k] * exp_neg_scalar(acc[k]);
}

}  // namespace

const Ops* avx2_ops() {
  static const Ops table{&sqdist_accum_avx2, &mul_exp_neg_avx2, &exp_neg_avx2};
  return &table;
}

}  // namespace mixkrig::simd

#else

namespace mixkrig::simd {
const Ops* avx2_ops() { return nullptr; }
}  // namespace mixkrig::simd

#endif
