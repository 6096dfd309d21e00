// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// is only entered after the dispatcher has confirmed CPU support.

#include "blockspec/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace blockspec::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) for x <= 0. Cody-Waite reduction x = n ln2 + r, |r| <= ln2/2, then a
// degree-13 Taylor polynomial in r. Results below 2^-1022 flush to zero.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d lower = _mm256_set1_pd(-708.0);

  const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lower);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n via the exponent field; n is in [-1022, 0] after clamping.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

}  // namespace

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gaussian_accumulate(const double* grid, double center, double weight,
                         double inv_two_sigma_sq, double* out, std::size_t n) {
  const __m256d c = _mm256_set1_pd(center);
  const __m256d w = _mm256_set1_pd(weight);
  const __m256d neg_k = _mm256_set1_pd(-inv_two_sigma_sq);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(grid + k), c);
    const __m256d e = exp_nonpositive(_mm256_mul_pd(_mm256_mul_pd(d, d), neg_k));
    _mm256_storeu_pd(out + k, _mm256_fmadd_pd(w, e, _mm256_loadu_pd(out + k)));
  }
  for (; k < n; ++k) {
    const double d = grid[k] - center;
    out[k] += weight * std::exp(-d * d * inv_two_sigma_sq);
  }
}

}  // namespace blockspec::kernels::avx2
