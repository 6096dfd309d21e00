// NEON variants for AArch64. The exponential stays scalar here; only the
// reductions and updates are vectorized.

#include "blockspec/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace blockspec::kernels::neon {

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gaussian_accumulate(const double* grid, double center, double weight,
                         double inv_two_sigma_sq, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double d = grid[k] - center;
    out[k] += weight * std::exp(-d * d * inv_two_sigma_sq);
  }
}

}  // namespace blockspec::kernels::neon
