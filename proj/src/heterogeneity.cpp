#include "blockspec/heterogeneity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"
#include "blockspec/parallel.hpp"

namespace blockspec {

std::string_view to_string(NormalizationMode m) {
  switch (m) {
    case NormalizationMode::tenth_largest: return "tenth_largest";
    case NormalizationMode::max_abs: return "max_abs";
    case NormalizationMode::none: return "none";
  }
  return "none";
}

NormalizationMode parse_normalization(std::string_view s) {
  if (s == "tenth_largest") return NormalizationMode::tenth_largest;
  if (s == "max_abs") return NormalizationMode::max_abs;
  if (s == "none") return NormalizationMode::none;
  throw std::invalid_argument("unknown normalization mode '" + std::string(s) + "'");
}

SpectrumScale spectrum_scale(std::span<const double> eigenvalues, NormalizationMode mode) {
  if (eigenvalues.empty()) throw std::invalid_argument("spectrum_scale: empty spectrum");
  SpectrumScale s;
  s.mode_used = mode;
  if (mode == NormalizationMode::tenth_largest) {
    if (eigenvalues.size() >= 10) {
      std::vector<double> sorted(eigenvalues.begin(), eigenvalues.end());
      std::nth_element(sorted.begin(), sorted.begin() + 9, sorted.end(), std::greater<>());
      s.scale = sorted[9];
      if (!(s.scale > 0.0)) {
        s.mode_used = NormalizationMode::max_abs;
        s.warning = "tenth largest eigenvalue " + format_double(s.scale) + " is not positive, falling back to max_abs";
      }
    } else {
      s.mode_used = NormalizationMode::max_abs;
      s.warning = "only " + std::to_string(eigenvalues.size()) +
                  " eigenvalues, tenth_largest falls back to max_abs";
    }
  }
  if (s.mode_used == NormalizationMode::max_abs) {
    s.scale = 0.0;
    for (double v : eigenvalues) s.scale = std::max(s.scale, std::abs(v));
  }
  if (s.mode_used == NormalizationMode::none) s.scale = 1.0;
  if (!(s.scale > 0.0))
    throw std::domain_error("spectrum_scale: non-positive scale " + format_double(s.scale) + " (" +
                            std::string(to_string(s.mode_used)) + ")");
  return s;
}

NormalizedSpectrum normalize_spectrum(std::span<const double> eigenvalues, NormalizationMode mode) {
  NormalizedSpectrum out;
  out.scale = spectrum_scale(eigenvalues, mode);
  out.eigenvalues.reserve(eigenvalues.size());
  for (double v : eigenvalues) out.eigenvalues.push_back(v / out.scale.scale);
  return out;
}

SpectralDensity normalize_spectrum(const SpectralDensity& d, double scale) {
  if (!(scale > 0.0)) throw std::domain_error("normalize_spectrum: non-positive scale");
  SpectralDensity out;
  out.sigma = d.sigma / scale;
  out.grid.reserve(d.grid.size());
  for (double t : d.grid) out.grid.push_back(t / scale);
  out.values = d.values;
  const double m = out.mass();
  if (!(m > 0.0)) throw std::domain_error("normalize_spectrum: density has no mass");
  for (auto& v : out.values) v /= m;
  return out;
}

namespace {

std::vector<double> cell_masses(const SpectralDensity& d) {
  const auto& g = d.grid;
  const std::size_t n = g.size();
  if (n < 2) throw std::invalid_argument("js_distance: grid too small");
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (d.values[k] < 0.0 || !std::isfinite(d.values[k]))
      throw std::invalid_argument("js_distance: negative or non-finite density value");
    const double left = k > 0 ? g[k] - g[k - 1] : 0.0;
    const double right = k + 1 < n ? g[k + 1] - g[k] : 0.0;
    p[k] = 0.5 * (left + right) * d.values[k];
  }
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) throw std::invalid_argument("js_distance: density has no mass");
  for (auto& v : p) v /= total;
  return p;
}

double js_same_grid(const SpectralDensity& p, const SpectralDensity& q) {
  const auto a = cell_masses(p);
  const auto b = cell_masses(q);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double m = 0.5 * (a[k] + b[k]);
    const double ta = a[k] > 0.0 ? a[k] * std::log2(a[k] / m) : 0.0;
    const double tb = b[k] > 0.0 ? b[k] * std::log2(b[k] / m) : 0.0;
    s += 0.5 * (ta + tb);
  }
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

double js_distance(const SpectralDensity& p, const SpectralDensity& q) {
  if (p.grid.size() != p.values.size() || q.grid.size() != q.values.size())
    throw std::invalid_argument("js_distance: grid/value size mismatch");
  if (p.grid == q.grid) return js_same_grid(p, q);
  const auto g = union_grid(p.grid, q.grid);
  const auto rp = resample(p, g);
  const auto rq = resample(q, g);
  if (rp.grid != rq.grid) throw std::logic_error("js_distance: grids differ after resampling");
  return js_same_grid(rp, rq);
}

double js_metric(const SpectralDensity& p, const SpectralDensity& q) { return std::sqrt(js_distance(p, q)); }

HeterogeneityReport pairwise_heatmap(const std::vector<SpectralDensity>& densities,
                                     NormalizationMode normalization, std::vector<std::string> labels,
                                     unsigned jobs) {
  const std::size_t n = densities.size();
  if (n < 2) throw std::invalid_argument("pairwise_heatmap: need at least 2 blocks, got " + std::to_string(n));
  if (labels.empty())
    for (std::size_t i = 0; i < n; ++i) labels.push_back("block" + std::to_string(i));
  if (labels.size() != n) throw std::invalid_argument("pairwise_heatmap: label count mismatch");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  const auto values = parallel_map<double>(pairs.size(), jobs, [&](std::size_t k) {
    return js_distance(densities[pairs[k].first], densities[pairs[k].second]);
  });

  HeterogeneityReport r;
  r.labels = std::move(labels);
  r.normalization = normalization;
  r.pairwise.assign(n * n, 0.0);
  double sum = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    r.pairwise[i * n + j] = r.pairwise[j * n + i] = values[k];
    sum += values[k];
  }
  r.js0 = sum / static_cast<double>(pairs.size());
  return r;
}

GridPolicy default_grid(double min_node, double max_node, double sigma_fraction, std::size_t points) {
  if (!(sigma_fraction > 0.0 && sigma_fraction < 1.0 / 6.0))
    throw std::invalid_argument("default_grid: sigma_fraction must lie in (0, 1/6)");
  const double span = max_node - min_node;
  const double ref = span > 0.0 ? span : std::max({std::abs(min_node), std::abs(max_node), 1e-300}) ;
  const double lo = min_node - 0.05 * ref;
  const double hi = max_node + 0.05 * ref;
  GridPolicy g;
  // sigma = f * (hi - lo + 6 sigma)
  g.sigma = sigma_fraction * (hi - lo) / (1.0 - 6.0 * sigma_fraction);
  g.grid = uniform_grid(lo - 3.0 * g.sigma, hi + 3.0 * g.sigma, points);
  return g;
}

std::vector<SpectralDensity> densities_from_eigenvalues(const std::vector<std::vector<double>>& block_eigenvalues,
                                                      const ExactSpectraOptions& opts,
                                                      std::vector<SpectrumScale>* scales) {
  std::vector<NormalizedSpectrum> normalized;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& eigs : block_eigenvalues) {
    normalized.push_back(normalize_spectrum(eigs, opts.normalization));
    for (double v : normalized.back().eigenvalues) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const auto policy = default_grid(lo, hi, opts.sigma_fraction, opts.grid_points);
  std::vector<SpectralDensity> densities;
  for (const auto& ns : normalized) {
    densities.push_back(smooth_eigenvalues(ns.eigenvalues, policy.grid, policy.sigma));
    if (scales) scales->push_back(ns.scale);
  }
  return densities;
}

HeterogeneityReport heatmap_from_eigenvalues(const std::vector<std::vector<double>>& block_eigenvalues,
                                             const ExactSpectraOptions& opts, std::vector<std::string> labels) {
  return pairwise_heatmap(densities_from_eigenvalues(block_eigenvalues, opts), opts.normalization, std::move(labels));
}

void write_heatmap_csv(const std::string& path, const HeterogeneityReport& r) {
  std::ostringstream out;
  out << "label";
  for (const auto& l : r.labels) out << "," << l;
  out << "\n";
  for (std::size_t i = 0; i < r.blocks(); ++i) {
    out << r.labels[i];
    for (std::size_t j = 0; j < r.blocks(); ++j) out << "," << format_double(r.at(i, j));
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

HeterogeneityReport read_heatmap_csv(const std::string& path) {
  const auto t = read_csv(path);
  HeterogeneityReport r;
  r.labels.assign(t.header.begin() + 1, t.header.end());
  const std::size_t n = r.labels.size();
  if (t.rows.size() != n) throw std::runtime_error(path + ": heatmap is not square");
  r.pairwise.resize(n * n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t.rows[i].size() != n + 1) throw std::runtime_error(path + ": short heatmap row");
    for (std::size_t j = 0; j < n; ++j) r.pairwise[i * n + j] = parse_double(t.rows[i][j + 1]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += r.pairwise[i * n + j];
  r.js0 = n > 1 ? sum / static_cast<double>(n * (n - 1) / 2) : 0.0;
  return r;
}

std::string js0_summary_line(const HeterogeneityReport& r) {
  return "js0=" + format_double(r.js0) + ",blocks=" + std::to_string(r.blocks()) +
         ",normalization=" + std::string(to_string(r.normalization));
}

}  // namespace blockspec
