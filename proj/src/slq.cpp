#include "blockspec/slq.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"
#include "blockspec/kernels.hpp"
#include "blockspec/parallel.hpp"

namespace blockspec {

LanczosFactorization lanczos(const SymmetricOperator& op, std::span<const double> v0, std::size_t m,
                             bool reorthogonalize, bool keep_basis) {
  const std::size_t n = op.dim();
  if (v0.size() != n) throw std::invalid_argument("lanczos: start vector has wrong length");
  if (m == 0) throw std::invalid_argument("lanczos: m must be positive");
  if (m > n) throw std::invalid_argument("lanczos: m = " + std::to_string(m) + " exceeds dim " + std::to_string(n));
  const double norm0 = std::sqrt(kernels::dot(v0, v0));
  if (std::abs(norm0 - 1.0) > 1e-12) throw std::invalid_argument("lanczos: start vector is not unit norm (" + format_double(norm0) + ")");

  LanczosFactorization f;
  std::vector<std::vector<double>> q;
  q.reserve(m);
  q.emplace_back(v0.begin(), v0.end());
  std::vector<double> w(n);
  double norm_est = 0.0;

  for (std::size_t j = 0; j < m; ++j) {
    op.apply(q[j], w);
    const double alpha = kernels::dot(q[j], w);
    f.alphas.push_back(alpha);
    kernels::axpy(-alpha, q[j], w);
    if (j > 0) kernels::axpy(-f.betas[j - 1], q[j - 1], w);
    if (reorthogonalize) {
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k <= j; ++k) kernels::axpy(-kernels::dot(q[k], w), q[k], w);
    }
    norm_est = std::max(norm_est, std::abs(alpha) + (j > 0 ? f.betas[j - 1] : 0.0));
    if (j + 1 == m) break;
    const double beta = std::sqrt(kernels::dot(w, w));
    norm_est = std::max(norm_est, beta);
    if (beta <= 1e-12 * norm_est) {
      f.terminated_early = true;
      break;
    }
    f.betas.push_back(beta);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / beta;
    q.push_back(std::move(next));
  }
  if (keep_basis) {
    q.resize(f.alphas.size());
    f.basis = std::move(q);
  }
  return f;
}

RitzQuadrature ritz_quadrature(const LanczosFactorization& f) {
  const std::size_t m = f.steps();
  if (m == 0) throw std::invalid_argument("ritz_quadrature: empty factorization");
  if (f.betas.size() + 1 != m) throw std::invalid_argument("ritz_quadrature: inconsistent factorization");
  const auto eig = tridiagonal_eigen(f.alphas, f.betas, true);
  RitzQuadrature r;
  r.nodes = eig.values;
  r.weights.resize(m);
  for (std::size_t c = 0; c < m; ++c) r.weights[c] = eig.vectors[c] * eig.vectors[c];  // row 0
  return r;
}

std::vector<RitzQuadrature> slq_quadratures(const SymmetricOperator& op, const SlqParams& params) {
  if (params.probes == 0) throw std::invalid_argument("slq: n_probes must be positive");
  if (params.steps == 0) throw std::invalid_argument("slq: steps must be positive");
  const std::size_t n = op.dim();
  if (n == 0) throw std::invalid_argument("slq: operator has dimension 0");
  const std::size_t m = std::min(params.steps, n);
  return parallel_map<RitzQuadrature>(params.probes, params.jobs, [&](std::size_t p) {
    auto rng = make_rng(params.seed, p);
    const auto v = rademacher_unit(rng, n);
    return ritz_quadrature(lanczos(op, v, m, true, false));
  });
}

SpectralDensity density_from_quadratures(const std::vector<RitzQuadrature>& rules, const SlqParams& params) {
  if (rules.empty()) throw std::invalid_argument("slq: no quadrature rules");
  std::vector<double> nodes, weights;
  const double inv_probes = 1.0 / static_cast<double>(rules.size());
  for (const auto& r : rules) {
    nodes.insert(nodes.end(), r.nodes.begin(), r.nodes.end());
    for (double w : r.weights) weights.push_back(w * inv_probes);
  }
  std::vector<double> grid;
  double sigma;
  if (params.grid) {
    grid = *params.grid;
    sigma = params.sigma.value_or(params.sigma_fraction * (grid.back() - grid.front()));
  } else {
    const auto [lo, hi] = std::minmax_element(nodes.begin(), nodes.end());
    auto policy = default_grid(*lo, *hi, params.sigma_fraction, params.grid_points);
    if (params.sigma) {
      // Keep the padded support but widen the margin to 3 * sigma.
      const double pad_lo = policy.grid.front() + 3.0 * policy.sigma;
      const double pad_hi = policy.grid.back() - 3.0 * policy.sigma;
      policy.sigma = *params.sigma;
      policy.grid = uniform_grid(pad_lo - 3.0 * policy.sigma, pad_hi + 3.0 * policy.sigma, params.grid_points);
    }
    grid = std::move(policy.grid);
    sigma = policy.sigma;
  }
  return smooth_spectrum(nodes, weights, std::move(grid), sigma);
}

SpectralDensity slq_density(const SymmetricOperator& op, const SlqParams& params) {
  return density_from_quadratures(slq_quadratures(op, params), params);
}

BlockwiseSpectra blockwise_densities(const OperatorPtr& op, const BlockPartition& partition,
                                     const SlqParams& params, NormalizationMode normalization) {
  if (!op) throw std::invalid_argument("blockwise_densities: null operator");
  if (partition.dim() != op->dim())
    throw std::invalid_argument("blockwise_densities: partition covers " + std::to_string(partition.dim()) +
                                " coordinates, operator has " + std::to_string(op->dim()));
  const auto* dense = dynamic_cast<const DenseSymmetric*>(op.get());
  const std::size_t blocks = partition.blocks();

  BlockwiseSpectra out;
  std::vector<std::vector<RitzQuadrature>> rules(blocks);
  for (std::size_t l = 0; l < blocks; ++l) {
    const auto range = partition.range(l);
    if (range.size() == 0) throw std::invalid_argument("blockwise_densities: block of size 0");
    SlqParams bp = params;
    bp.seed = derive_seed(params.seed, l);
    if (dense) {
      rules[l] = slq_quadratures(dense->principal_block(range), bp);
    } else {
      rules[l] = slq_quadratures(PrincipalSubOperator(op, range), bp);
    }
    // Normalize nodes by the block's scale.
    auto scale = spectrum_scale(rules[l].front().nodes, normalization);
    if (!scale.warning.empty()) out.warnings.push_back("block " + std::to_string(l) + ": " + scale.warning);
    for (auto& r : rules[l])
      for (auto& x : r.nodes) x /= scale.scale;
    out.scales.push_back(std::move(scale));
  }

  double lo = INFINITY, hi = -INFINITY;
  for (const auto& block : rules)
    for (const auto& r : block)
      for (double x : r.nodes) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  SlqParams shared = params;
  if (!shared.grid) {
    auto policy = default_grid(lo, hi, params.sigma_fraction, params.grid_points);
    shared.grid = std::move(policy.grid);
    if (!shared.sigma) shared.sigma = policy.sigma;
  }
  for (std::size_t l = 0; l < blocks; ++l) out.densities.push_back(density_from_quadratures(rules[l], shared));
  return out;
}

void write_factorization_csv(const std::string& path, const LanczosFactorization& f) {
  std::ostringstream out;
  out << "alpha,beta\n";
  for (std::size_t i = 0; i < f.alphas.size(); ++i) {
    out << format_double(f.alphas[i]) << ",";
    if (i < f.betas.size()) out << format_double(f.betas[i]);
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

LanczosFactorization read_factorization_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto a = t.column("alpha");
  const auto b = t.column("beta");
  LanczosFactorization f;
  for (const auto& r : t.rows) {
    f.alphas.push_back(parse_double(r.at(a)));
    if (b < r.size() && !r[b].empty()) f.betas.push_back(parse_double(r[b]));
  }
  if (f.betas.size() + 1 != f.alphas.size() && !f.alphas.empty())
    throw std::runtime_error(path + ": expected one fewer beta than alpha");
  return f;
}

}  // namespace blockspec
