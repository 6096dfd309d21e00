#pragma once

// Spectrum normalization, Jensen-Shannon distance between densities, and the
// pairwise block-heterogeneity report.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockspec/density.hpp"

namespace blockspec {

enum class NormalizationMode { tenth_largest, max_abs, none };

std::string_view to_string(NormalizationMode m);
NormalizationMode parse_normalization(std::string_view s);

/// Scale chosen for one spectrum. `mode_used` differs from the requested mode
/// when tenth_largest had to fall back to max_abs; `warning` then says why.
struct SpectrumScale {
  double scale = 1.0;
  NormalizationMode mode_used = NormalizationMode::none;
  std::string warning;
};

/// Scale for a list of eigenvalues (any order). Throws std::domain_error when
/// the chosen scale is not positive. tenth_largest falls back to max_abs
/// when there are fewer than 10 values or the tenth largest is not positive.
SpectrumScale spectrum_scale(std::span<const double> eigenvalues, NormalizationMode mode);

struct NormalizedSpectrum {
  std::vector<double> eigenvalues;
  SpectrumScale scale;
};

NormalizedSpectrum normalize_spectrum(std::span<const double> eigenvalues, NormalizationMode mode);

/// Divides the grid by `scale` and re-normalizes to unit mass.
SpectralDensity normalize_spectrum(const SpectralDensity& d, double scale);

/// Jensen-Shannon divergence with base-2 logarithms between the discretized
/// densities; in [0, 1]. Differing grids are resampled onto their union grid.
double js_distance(const SpectralDensity& p, const SpectralDensity& q);

/// Square root of js_distance, a metric. Not used for js0.
double js_metric(const SpectralDensity& p, const SpectralDensity& q);

struct HeterogeneityReport {
  std::vector<std::string> labels;
  std::vector<double> pairwise;  // L*L row-major, symmetric, zero diagonal
  double js0 = 0.0;              // mean of the strict upper triangle
  NormalizationMode normalization = NormalizationMode::none;

  std::size_t blocks() const { return labels.size(); }
  double at(std::size_t i, std::size_t j) const { return pairwise[i * labels.size() + j]; }
};

/// All pairwise distances. Densities are taken as already normalized; the mode
/// is recorded in the report. `jobs` bounds the worker threads.
HeterogeneityReport pairwise_heatmap(const std::vector<SpectralDensity>& densities,
                                     NormalizationMode normalization, std::vector<std::string> labels = {},
                                     unsigned jobs = 1);

/// Convenience path from exact per-block eigenvalues: normalize each list,
/// smooth on one shared grid and build the heatmap.
struct ExactSpectraOptions {
  NormalizationMode normalization = NormalizationMode::tenth_largest;
  double sigma_fraction = 0.01;
  std::size_t grid_points = 2048;
};
std::vector<SpectralDensity> densities_from_eigenvalues(const std::vector<std::vector<double>>& block_eigenvalues,
                                                      const ExactSpectraOptions& opts,
                                                      std::vector<SpectrumScale>* scales = nullptr);
HeterogeneityReport heatmap_from_eigenvalues(const std::vector<std::vector<double>>& block_eigenvalues,
                                             const ExactSpectraOptions& opts,
                                             std::vector<std::string> labels = {});

/// Shared grid and sigma for densities whose nodes span [min_node, max_node]:
/// the span is padded by 5% on each side, sigma is `sigma_fraction` of the
/// final grid width, and the grid extends 3 sigma past the padded span.
struct GridPolicy {
  std::vector<double> grid;
  double sigma = 0.0;
};
GridPolicy default_grid(double min_node, double max_node, double sigma_fraction, std::size_t points);

void write_heatmap_csv(const std::string& path, const HeterogeneityReport& r);
HeterogeneityReport read_heatmap_csv(const std::string& path);
std::string js0_summary_line(const HeterogeneityReport& r);

}  // namespace blockspec
