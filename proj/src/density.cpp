#include "blockspec/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"
#include "blockspec/kernels.hpp"

namespace blockspec {

double SpectralDensity::mass() const { return trapezoid(grid, values); }

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
  if (!(hi > lo)) throw std::invalid_argument("uniform_grid: hi must exceed lo");
  std::vector<double> g(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + h * static_cast<double>(i);
  g.back() = hi;
  return g;
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
  if (grid.size() != values.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) s += 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
  return s;
}

SpectralDensity smooth_spectrum(std::span<const double> nodes, std::span<const double> weights,
                                std::vector<double> grid, double sigma, double max_leakage) {
  if (nodes.size() != weights.size()) throw std::invalid_argument("smooth_spectrum: nodes/weights mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("smooth_spectrum: sigma must be positive");
  if (grid.size() < 2) throw std::invalid_argument("smooth_spectrum: grid too small");
  double total_weight = 0.0;
  for (double w : weights) total_weight += w;
  if (!(total_weight > 0.0)) throw std::invalid_argument("smooth_spectrum: weights sum to zero");

  SpectralDensity d;
  d.sigma = sigma;
  d.values.assign(grid.size(), 0.0);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi) * total_weight);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    kernels::gaussian_accumulate(grid, nodes[i], weights[i] * norm, inv2s2, d.values);
  d.grid = std::move(grid);

  const double raw = d.mass();
  if (!(std::abs(1.0 - raw) <= max_leakage)) {
    std::ostringstream msg;
    msg << "density grid [" << d.grid.front() << ", " << d.grid.back() << "] is too narrow: mass " << raw
        << " captured (leakage " << 1.0 - raw << " exceeds " << max_leakage << ")";
    throw std::domain_error(msg.str());
  }
  for (auto& v : d.values) v /= raw;
  return d;
}

SpectralDensity smooth_eigenvalues(std::span<const double> eigenvalues, std::vector<double> grid, double sigma) {
  std::vector<double> w(eigenvalues.size(), 1.0);
  return smooth_spectrum(eigenvalues, w, std::move(grid), sigma);
}

SpectralDensity resample(const SpectralDensity& d, const std::vector<double>& grid) {
  SpectralDensity out;
  out.sigma = d.sigma;
  out.grid = grid;
  out.values.assign(grid.size(), 0.0);
  const auto& g = d.grid;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    if (t < g.front() || t > g.back()) continue;
    auto it = std::upper_bound(g.begin(), g.end(), t);
    if (it == g.end()) {
      out.values[k] = d.values.back();
      continue;
    }
    const std::size_t hi = static_cast<std::size_t>(it - g.begin());
    const std::size_t lo = hi - 1;
    const double f = (t - g[lo]) / (g[hi] - g[lo]);
    out.values[k] = (1.0 - f) * d.values[lo] + f * d.values[hi];
  }
  const double m = out.mass();
  if (!(m > 0.0)) throw std::domain_error("resample: no mass on target grid");
  for (auto& v : out.values) v /= m;
  return out;
}

std::vector<double> union_grid(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> u;
  u.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

double l1_distance(const SpectralDensity& p, const SpectralDensity& q) {
  if (p.grid == q.grid) {
    std::vector<double> diff(p.grid.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(p.values[i] - q.values[i]);
    return trapezoid(p.grid, diff);
  }
  const auto g = union_grid(p.grid, q.grid);
  return l1_distance(resample(p, g), resample(q, g));
}

void write_density_csv(const std::string& path, const SpectralDensity& d) {
  std::ostringstream out;
  out << "t,density\n";
  for (std::size_t i = 0; i < d.grid.size(); ++i) out << format_double(d.grid[i]) << "," << format_double(d.values[i]) << "\n";
  write_file_atomic(path, out.str());
}

SpectralDensity read_density_csv(const std::string& path) {
  const auto t = read_csv(path);
  SpectralDensity d;
  d.grid = t.numeric_column("t");
  d.values = t.numeric_column("density");
  for (std::size_t i = 1; i < d.grid.size(); ++i)
    if (!(d.grid[i] > d.grid[i - 1])) throw std::runtime_error(path + ": grid is not strictly increasing");
  for (double v : d.values)
    if (v < 0.0) throw std::runtime_error(path + ": negative density value");
  return d;
}

}  // namespace blockspec
