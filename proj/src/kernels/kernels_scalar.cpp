#include "blockspec/kernels.hpp"

#include <cmath>

namespace blockspec::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gaussian_accumulate(const double* grid, double center, double weight,
                         double inv_two_sigma_sq, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double d = grid[k] - center;
    out[k] += weight * std::exp(-d * d * inv_two_sigma_sq);
  }
}

}  // namespace blockspec::kernels::scalar
