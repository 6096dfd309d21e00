#pragma once

// Quadratic laboratory: L(w) = 1/2 w^T H w - h^T w with block-diagonal
// positive-definite H. Gradient descent, Adam without momentum (frozen or
// exponentially averaged preconditioner), learning-rate search, and the
// convergence-rate constants that separate the two.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockspec/operator.hpp"

namespace blockspec {

class QuadraticProblem {
 public:
  QuadraticProblem(std::vector<DenseSymmetric> blocks, std::vector<double> h);

  std::size_t dim() const { return hessian_.dim(); }
  const BlockDiagonalOperator& hessian() const { return hessian_; }
  const BlockPartition& partition() const { return hessian_.partition(); }
  const std::vector<double>& linear_term() const { return h_; }
  const std::vector<double>& minimizer() const { return minimizer_; }
  double optimum() const { return optimum_; }

  /// Descending eigenvalues of H and of each block.
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  const std::vector<std::vector<double>>& block_eigenvalues() const { return block_eigenvalues_; }
  double kappa() const;
  std::vector<double> block_kappas() const;

  double loss(std::span<const double> w) const;
  /// L(w) - L* evaluated as 1/2 (w - w*)^T H (w - w*), free of cancellation.
  double excess_loss(std::span<const double> w) const;
  std::vector<double> gradient(std::span<const double> w) const;
  void gradient(std::span<const double> w, std::span<double> out) const;

  /// (cH, ch).
  QuadraticProblem scaled(double c) const;

 private:
  BlockDiagonalOperator hessian_;
  std::vector<double> h_;
  std::vector<double> minimizer_;
  double optimum_ = 0.0;
  std::vector<double> eigenvalues_;
  std::vector<std::vector<double>> block_eigenvalues_;
};

/// Cases 3 and 4 are self-contained (L = 3, d_l = 3). Cases 1 and 2 need one
/// eigenvalue CSV per block (4 files, >= 25 values each); d_l = 25 values are
/// sampled from each file and all blocks are mapped affinely onto [1, 5000].
QuadraticProblem make_case(int case_id, std::uint64_t seed, const std::vector<std::string>& spectrum_files = {});

/// Eigenvalue groups used by the self-contained cases.
std::vector<std::vector<double>> case_block_spectra(int case_id);

/// H = diag(1, kappa), h = 0.
QuadraticProblem hard_instance(double kappa = 5000.0);
/// Start point with equal initial loss in every eigendirection of a diagonal
/// problem: 1/2 lambda_i w_i^2 = 1/2.
std::vector<double> equal_energy_start(const QuadraticProblem& diagonal_problem);

enum class OptimizerKind { gd, adam_fixed, adam_ema };
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::gd;
  double eta = 0.0;
  double beta2 = 1.0;  // 1 for gd / adam_fixed, in [0, 1) for adam_ema

  void validate() const;
};

enum class RunStatus { converged, max_iters, diverged };
std::string_view to_string(RunStatus s);

struct RunOptions {
  std::size_t max_iters = 100000;
  double target = 1e-8;        // stop once the loss ratio is <= target (0 disables)
  bool keep_snapshots = true;  // iterates at t < 50, every 100 steps, and the last 50
};

struct Trajectory {
  OptimizerConfig config;
  std::vector<double> loss_ratios;  // index t: (L(w^t) - L*) / (L(w^0) - L*); [0] == 1
  std::vector<std::pair<std::size_t, std::vector<double>>> snapshots;
  std::vector<double> final_iterate;
  double initial_excess = 0.0;  // L(w^0) - L*
  std::size_t iterations = 0;
  RunStatus status = RunStatus::max_iters;
  std::size_t skipped_updates = 0;  // adam_ema coordinates left unchanged (zero preconditioner)

  /// First t with loss_ratios[t] <= target, if any.
  std::optional<std::size_t> iterations_to(double target) const;
};

double default_gd_eta(const QuadraticProblem& p);  // 2 / (lambda_1 + lambda_d)

Trajectory gd_run(const QuadraticProblem& p, std::optional<double> eta, std::span<const double> w0,
                  const RunOptions& opts = {});

/// Diagonal of the frozen preconditioner |grad L(w0)|. Throws naming the first
/// zero coordinate.
std::vector<double> adam_fixed_preconditioner(const QuadraticProblem& p, std::span<const double> w0);

Trajectory adam_fixed_run(const QuadraticProblem& p, double eta, std::span<const double> w0,
                          const RunOptions& opts = {});

/// Adam with beta1 = 0, eps = 0 and second moment
/// v_t = beta2 v_{t-1} + (1 - beta2) g_t^2, v_0 = g_0^2.
class AdamEmaStepper {
 public:
  AdamEmaStepper(const QuadraticProblem& p, std::span<const double> w0, double eta, double beta2);

  /// Applies the update for the current iterate and advances t.
  void step();
  std::size_t t() const { return t_; }
  const std::vector<double>& iterate() const { return w_; }
  /// v used by the most recent step (empty before the first step).
  const std::vector<double>& second_moment() const { return v_; }
  std::size_t skipped_updates() const { return skipped_; }

 private:
  const QuadraticProblem* problem_;
  std::vector<double> w_, v_, g_;
  double eta_, beta2_;
  std::size_t t_ = 0;
  std::size_t skipped_ = 0;
};

Trajectory adam_ema_run(const QuadraticProblem& p, double eta, double beta2, std::span<const double> w0,
                        const RunOptions& opts = {});

Trajectory run_optimizer(const QuadraticProblem& p, const OptimizerConfig& cfg, std::span<const double> w0,
                         const RunOptions& opts = {});

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

enum class GridStatus { ok, none_converged, all_diverged };
std::string_view to_string(GridStatus s);

struct GridSearchResult {
  std::vector<Trajectory> runs;        // same order as the eta grid
  std::optional<std::size_t> best;     // index into runs
  std::optional<std::size_t> best_iterations;
  GridStatus status = GridStatus::ok;
};

/// Best = fewest iterations to opts.target, ties to the smaller eta. When no
/// run converges the best non-diverged run is the one with the lowest final
/// ratio and the status says so.
GridSearchResult grid_search(const QuadraticProblem& p, OptimizerKind kind, std::span<const double> etas,
                             std::span<const double> w0, const RunOptions& opts = {}, double beta2 = 1.0,
                             unsigned jobs = 1);

struct TheoryReport {
  double kappa = 0.0;
  std::vector<double> block_kappas;
  std::vector<double> c1;  // min_i |g0_{l,i}| / lambda_{l,1}
  std::vector<double> c2;  // max_i |g0_{l,i}| / lambda_{l,1}
  double r = 0.0;          // max_l c2^2 / min_l c1^2
  double eta_theory = 0.0;   // min_l c1: step for which the contraction bound is checked
  double eta_literal = 0.0;  // min_l 1/c1, kept for reference
  double gd_factor = 0.0;    // 1 - 2/(kappa + 1)
  double adam_factor = 0.0;  // max_l (1 - 1/(r kappa_l))
};

TheoryReport theory_report(const QuadraticProblem& p, std::span<const double> w0);

enum class BoundKind { gd_lower, adam_upper };

struct BoundVerification {
  BoundKind kind = BoundKind::gd_lower;
  double bound = 0.0;
  double slack = 1e-9;
  std::vector<double> step_factors;  // (L(w^{t+1}) - L*) / (L(w^t) - L*)
  std::size_t violations = 0;
  std::size_t checked_steps = 0;
  double min_factor = 0.0;
  double max_factor = 0.0;
};

/// Per-step check of the loss contraction against the report's factor:
/// gd_lower requires factor >= gd_factor - slack, adam_upper requires
/// factor <= adam_factor + slack. Steps whose excess loss is below 1e-280
/// (numerically exhausted) are not checked.
BoundVerification verify_bounds(const Trajectory& t, const TheoryReport& report, BoundKind which,
                                double slack = 1e-9);

/// Largest per-direction loss factor ((w^{t+1}_i - w*_i) / (w^t_i - w*_i))^2
/// over the eigendirections of a diagonal problem, for every pair of
/// consecutive snapshots in the trajectory. Directions already at the
/// minimizer are skipped. Needs snapshots at t and t + 1 for some t.
std::vector<double> direction_step_factors(const QuadraticProblem& diagonal_problem, const Trajectory& t);

struct LimitCycleResult {
  bool cycling = false;
  double tail_min_loss = 0.0;  // min excess loss over the window
  double threshold = 0.0;      // 1e-4 * eta^2
};

LimitCycleResult detect_limit_cycle(const Trajectory& t, std::size_t transient, std::size_t window);

/// Flat key=value record.
std::string format_theory_report(const TheoryReport& r);
TheoryReport parse_theory_report(const std::string& text);

}  // namespace blockspec
