#include "blockspec/kernels.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace blockspec::kernels {
namespace {

Backend detect() {
#if defined(BLOCKSPEC_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::avx2;
#elif defined(BLOCKSPEC_HAVE_NEON)
  return Backend::neon;
#endif
  return Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  return b == detect();
}

void set_backend(Backend b) {
  if (!backend_available(b))
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(b)));
  current().store(b, std::memory_order_relaxed);
}

void reset_backend() { current().store(detect(), std::memory_order_relaxed); }

namespace {
void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), "dot");
  switch (active_backend()) {
#if defined(BLOCKSPEC_HAVE_AVX2)
    case Backend::avx2: return avx2::dot(x.data(), y.data(), x.size());
#endif
#if defined(BLOCKSPEC_HAVE_NEON)
    case Backend::neon: return neon::dot(x.data(), y.data(), x.size());
#endif
    default: return scalar::dot(x.data(), y.data(), x.size());
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_lengths(x.size(), y.size(), "axpy");
  switch (active_backend()) {
#if defined(BLOCKSPEC_HAVE_AVX2)
    case Backend::avx2: avx2::axpy(alpha, x.data(), y.data(), x.size()); return;
#endif
#if defined(BLOCKSPEC_HAVE_NEON)
    case Backend::neon: neon::axpy(alpha, x.data(), y.data(), x.size()); return;
#endif
    default: scalar::axpy(alpha, x.data(), y.data(), x.size());
  }
}

void gaussian_accumulate(std::span<const double> grid, double center, double weight,
                         double inv_two_sigma_sq, std::span<double> out) {
  check_lengths(grid.size(), out.size(), "gaussian_accumulate");
  switch (active_backend()) {
#if defined(BLOCKSPEC_HAVE_AVX2)
    case Backend::avx2:
      avx2::gaussian_accumulate(grid.data(), center, weight, inv_two_sigma_sq, out.data(), grid.size());
      return;
#endif
#if defined(BLOCKSPEC_HAVE_NEON)
    case Backend::neon:
      neon::gaussian_accumulate(grid.data(), center, weight, inv_two_sigma_sq, out.data(), grid.size());
      return;
#endif
    default:
      scalar::gaussian_accumulate(grid.data(), center, weight, inv_two_sigma_sq, out.data(), grid.size());
  }
}

}  // namespace blockspec::kernels
