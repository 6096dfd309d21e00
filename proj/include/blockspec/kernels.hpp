#pragma once

// Inner-loop arithmetic kernels.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, a vectorized variant (AVX2+FMA on x86-64, NEON on AArch64).
// The active backend is chosen once at startup from the CPU features and can
// be overridden for testing. All callers go through the dispatch functions
// below so that a whole run uses a single backend; that keeps results
// bit-stable across thread counts.

#include <cstddef>
#include <span>
#include <string_view>

namespace blockspec::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b);

/// Backend currently used by the dispatch functions.
Backend active_backend();

/// Whether `b` can run on this machine.
bool backend_available(Backend b);

/// Force a backend. Throws std::invalid_argument if it is unavailable.
void set_backend(Backend b);

/// Restore the automatically detected backend.
void reset_backend();

double dot(std::span<const double> x, std::span<const double> y);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// out[k] += weight * exp(-(grid[k] - center)^2 * inv_two_sigma_sq)
void gaussian_accumulate(std::span<const double> grid, double center, double weight,
                         double inv_two_sigma_sq, std::span<double> out);

// Per-backend entry points; exposed so equivalence tests can call both sides.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gaussian_accumulate(const double* grid, double center, double weight,
                         double inv_two_sigma_sq, double* out, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gaussian_accumulate(const double* grid, double center, double weight,
                         double inv_two_sigma_sq, double* out, std::size_t n);
}  // namespace avx2

namespace neon {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gaussian_accumulate(const double* grid, double center, double weight,
                         double inv_two_sigma_sq, double* out, std::size_t n);
}  // namespace neon

}  // namespace blockspec::kernels
