#pragma once

// Stochastic Lanczos quadrature: probe-averaged Gauss quadrature estimates of
// the eigenvalue density of a symmetric operator, using only products A*v.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockspec/density.hpp"
#include "blockspec/heterogeneity.hpp"
#include "blockspec/operator.hpp"

namespace blockspec {

struct LanczosFactorization {
  std::vector<double> alphas;               // diagonal of T, size m
  std::vector<double> betas;                // off-diagonal of T, size m-1, all >= 0
  std::vector<std::vector<double>> basis;   // m orthonormal vectors when retained
  bool terminated_early = false;            // an invariant subspace was found before m steps

  std::size_t steps() const { return alphas.size(); }
};

/// m steps of the symmetric Lanczos recurrence from unit vector v0. With
/// `reorthogonalize`, every new vector is Gram-Schmidt'd twice against the
/// whole basis. Stops early once beta < 1e-12 * ||A||_est.
LanczosFactorization lanczos(const SymmetricOperator& op, std::span<const double> v0, std::size_t m,
                             bool reorthogonalize = true, bool keep_basis = false);

struct RitzQuadrature {
  std::vector<double> nodes;    // ascending eigenvalues of T
  std::vector<double> weights;  // squared first eigenvector components, sum to 1
};

RitzQuadrature ritz_quadrature(const LanczosFactorization& f);

struct SlqParams {
  std::size_t steps = 80;
  std::size_t probes = 10;
  double sigma_fraction = 0.01;         // used when sigma is unset
  std::optional<double> sigma;          // absolute kernel width
  std::size_t grid_points = 2048;
  std::optional<std::vector<double>> grid;  // overrides the automatic grid
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  /// Few steps and a single probe.
  static SlqParams cheap() {
    SlqParams p;
    p.steps = 10;
    p.probes = 1;
    return p;
  }
};

/// One quadrature rule per probe, index-ordered. Probe p draws a Rademacher
/// vector from stream (seed, p); steps are capped at the operator dimension.
std::vector<RitzQuadrature> slq_quadratures(const SymmetricOperator& op, const SlqParams& params);

/// Probe-averaged Gaussian-smoothed density built from the quadrature rules.
SpectralDensity density_from_quadratures(const std::vector<RitzQuadrature>& rules, const SlqParams& params);

SpectralDensity slq_density(const SymmetricOperator& op, const SlqParams& params);

struct BlockwiseSpectra {
  std::vector<SpectralDensity> densities;  // shared grid
  std::vector<SpectrumScale> scales;
  std::vector<std::string> warnings;
};

/// SLQ on each principal block [A]_l with probes restricted to the block
/// coordinates. Each block's Ritz nodes are divided by its normalization
/// scale (tenth largest node of the first probe, or max |node|), then every
/// block is smoothed on one shared grid.
BlockwiseSpectra blockwise_densities(const OperatorPtr& op, const BlockPartition& partition,
                                     const SlqParams& params,
                                     NormalizationMode normalization = NormalizationMode::none);

void write_factorization_csv(const std::string& path, const LanczosFactorization& f);
LanczosFactorization read_factorization_csv(const std::string& path);

}  // namespace blockspec
