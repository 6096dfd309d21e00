#pragma once

// Smoothed eigenvalue densities on a uniform real grid.

#include <span>
#include <string>
#include <vector>

namespace blockspec {

struct SpectralDensity {
  std::vector<double> grid;    // strictly increasing
  std::vector<double> values;  // nonnegative, unit trapezoidal mass
  double sigma = 0.0;          // Gaussian broadening width, in eigenvalue units

  double mass() const;
};

/// `n` equally spaced points from lo to hi inclusive.
std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

double trapezoid(std::span<const double> grid, std::span<const double> values);

/// sum_i weights[i] * N(t; nodes[i], sigma) on `grid`, rescaled to unit mass.
/// Throws if more than `max_leakage` of the raw mass falls outside the grid.
SpectralDensity smooth_spectrum(std::span<const double> nodes, std::span<const double> weights,
                                std::vector<double> grid, double sigma, double max_leakage = 1e-2);

/// Equal-weight smoothing of an eigenvalue list (the "exact" density).
SpectralDensity smooth_eigenvalues(std::span<const double> eigenvalues, std::vector<double> grid, double sigma);

/// Linear interpolation onto `grid` (zero outside the source support), then
/// renormalized to unit mass.
SpectralDensity resample(const SpectralDensity& d, const std::vector<double>& grid);

/// Sorted union of both grids with duplicates removed.
std::vector<double> union_grid(const std::vector<double>& a, const std::vector<double>& b);

/// Trapezoidal integral of |p - q|; resamples onto a union grid if needed.
double l1_distance(const SpectralDensity& p, const SpectralDensity& q);

void write_density_csv(const std::string& path, const SpectralDensity& d);
SpectralDensity read_density_csv(const std::string& path);

}  // namespace blockspec
