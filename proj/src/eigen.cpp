#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "blockspec/operator.hpp"

namespace blockspec {

TridiagonalEigen tridiagonal_eigen(std::span<const double> diag, std::span<const double> offdiag,
                                   bool want_vectors) {
  const std::size_t n = diag.size();
  if (n == 0) throw std::invalid_argument("tridiagonal_eigen: empty matrix");
  if (offdiag.size() + 1 != n) throw std::invalid_argument("tridiagonal_eigen: offdiag must have n-1 entries");

  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> e(n, 0.0);  // e[i] couples i and i+1
  std::copy(offdiag.begin(), offdiag.end(), e.begin());
  std::vector<double> z;
  if (want_vectors) {
    z.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
  }

  const double eps = std::numeric_limits<double>::epsilon();
  const long nn = static_cast<long>(n);
  for (long l = 0; l < nn; ++l) {
    int iter = 0;
    long m;
    do {
      for (m = l; m < nn - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (++iter > 100) throw std::runtime_error("tridiagonal_eigen: QL iteration did not converge");
        // Wilkinson-type shift from the leading 2x2.
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        long i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (want_vectors) {
            for (std::size_t k = 0; k < n; ++k) {
              f = z[k * n + i + 1];
              z[k * n + i + 1] = s * z[k * n + i] + c * f;
              z[k * n + i] = c * z[k * n + i] - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  TridiagonalEigen out;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.values[k] = d[order[k]];
  if (want_vectors) {
    out.vectors.resize(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) out.vectors[r * n + c] = z[r * n + order[c]];
  }
  return out;
}

namespace {

// Householder reduction of a full row-major symmetric matrix to tridiagonal
// form. Only the spectrum is needed, so reflectors are not accumulated.
void householder_tridiagonalize(std::size_t n, std::vector<double>& a, std::vector<double>& diag,
                                std::vector<double>& off) {
  diag.assign(n, 0.0);
  off.assign(n > 0 ? n - 1 : 0, 0.0);
  std::vector<double> u(n), p(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t len = n - k - 1;
    diag[k] = a[k * n + k];
    double norm = 0.0;
    for (std::size_t i = 0; i < len; ++i) norm = std::hypot(norm, a[(k + 1 + i) * n + k]);
    const double x0 = a[(k + 1) * n + k];
    if (norm == 0.0) {
      off[k] = 0.0;
      continue;
    }
    const double alpha = x0 > 0 ? -norm : norm;
    for (std::size_t i = 0; i < len; ++i) u[i] = a[(k + 1 + i) * n + k];
    u[0] -= alpha;
    double unorm = 0.0;
    for (std::size_t i = 0; i < len; ++i) unorm = std::hypot(unorm, u[i]);
    off[k] = alpha;
    if (unorm == 0.0) continue;
    for (std::size_t i = 0; i < len; ++i) u[i] /= unorm;

    // p = A22 u, kk = u^T p, q = p - kk u, A22 -= 2 u q^T + 2 q u^T
    double kk = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      double s = 0.0;
      const double* row = &a[(k + 1 + i) * n + (k + 1)];
      for (std::size_t j = 0; j < len; ++j) s += row[j] * u[j];
      p[i] = s;
      kk += u[i] * s;
    }
    for (std::size_t i = 0; i < len; ++i) p[i] -= kk * u[i];
    for (std::size_t i = 0; i < len; ++i) {
      double* row = &a[(k + 1 + i) * n + (k + 1)];
      for (std::size_t j = 0; j < len; ++j) row[j] -= 2.0 * (u[i] * p[j] + p[i] * u[j]);
    }
  }
  if (n >= 2) {
    diag[n - 2] = a[(n - 2) * n + (n - 2)];
    off[n - 2] = a[(n - 1) * n + (n - 2)];
  }
  if (n >= 1) diag[n - 1] = a[(n - 1) * n + (n - 1)];
}

}  // namespace

std::vector<double> exact_eigenvalues(const DenseSymmetric& m) {
  const std::size_t n = m.dim();
  if (n == 0) throw std::invalid_argument("exact_eigenvalues: empty matrix");
  if (n > kMaxOracleDim)
    throw std::invalid_argument("exact_eigenvalues: dim " + std::to_string(n) + " exceeds oracle limit " +
                                std::to_string(kMaxOracleDim));
  if (!m.all_finite()) throw std::invalid_argument("exact_eigenvalues: non-finite entries");
  auto full = m.to_full();
  std::vector<double> d, e;
  householder_tridiagonalize(n, full, d, e);
  auto vals = tridiagonal_eigen(d, e, false).values;
  std::reverse(vals.begin(), vals.end());
  return vals;
}

double condition_number(std::span<const double> eigenvalues_desc) {
  if (eigenvalues_desc.empty()) throw std::invalid_argument("condition_number: empty spectrum");
  const auto [mn, mx] = std::minmax_element(eigenvalues_desc.begin(), eigenvalues_desc.end());
  if (!(*mn > 0.0))
    throw std::domain_error("condition_number: smallest eigenvalue " + std::to_string(*mn) +
                            " <= 0, matrix is not positive definite");
  return *mx / *mn;
}

}  // namespace blockspec
