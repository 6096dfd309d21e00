#include "blockspec/quadlab.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"
#include "blockspec/kernels.hpp"
#include "blockspec/parallel.hpp"

namespace blockspec {

namespace {

// Solves B x = b for a symmetric positive-definite block by Cholesky.
std::vector<double> cholesky_solve(const DenseSymmetric& b, std::span<const double> rhs) {
  const std::size_t n = b.dim();
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = b(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0)) throw std::domain_error("QuadraticProblem: block is not positive definite");
    l[j * n + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = b(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / l[j * n + j];
    }
  }
  std::vector<double> y(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l[i * n + k] * y[k];
    y[i] /= l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) y[i] -= l[k * n + i] * y[k];
    y[i] /= l[i * n + i];
  }
  return y;
}

}  // namespace

// ---- QuadraticProblem -------------------------------------------------------

QuadraticProblem::QuadraticProblem(std::vector<DenseSymmetric> blocks, std::vector<double> h)
    : hessian_(std::move(blocks)), h_(std::move(h)) {
  if (h_.size() != hessian_.dim()) throw std::invalid_argument("QuadraticProblem: h has wrong length");
  minimizer_.assign(dim(), 0.0);
  for (std::size_t l = 0; l < hessian_.blocks().size(); ++l) {
    const auto& b = hessian_.blocks()[l];
    auto eigs = exact_eigenvalues(b);
    if (!(eigs.back() > 0.0))
      throw std::domain_error("QuadraticProblem: block " + std::to_string(l) + " has eigenvalue " +
                              format_double(eigs.back()) + " <= 0");
    eigenvalues_.insert(eigenvalues_.end(), eigs.begin(), eigs.end());
    block_eigenvalues_.push_back(std::move(eigs));
    const auto r = partition().range(l);
    const auto x = cholesky_solve(b, std::span<const double>(h_).subspan(r.begin, r.size()));
    std::copy(x.begin(), x.end(), minimizer_.begin() + static_cast<std::ptrdiff_t>(r.begin));
  }
  std::sort(eigenvalues_.begin(), eigenvalues_.end(), std::greater<>());
  optimum_ = -0.5 * kernels::dot(h_, minimizer_);
}

double QuadraticProblem::kappa() const { return condition_number(eigenvalues_); }

std::vector<double> QuadraticProblem::block_kappas() const {
  std::vector<double> k;
  for (const auto& e : block_eigenvalues_) k.push_back(condition_number(e));
  return k;
}

double QuadraticProblem::loss(std::span<const double> w) const {
  const auto hw = hessian_(w);
  return 0.5 * kernels::dot(w, hw) - kernels::dot(h_, w);
}

double QuadraticProblem::excess_loss(std::span<const double> w) const {
  std::vector<double> e(w.begin(), w.end());
  kernels::axpy(-1.0, minimizer_, e);
  const auto he = hessian_(e);
  return 0.5 * kernels::dot(e, he);
}

std::vector<double> QuadraticProblem::gradient(std::span<const double> w) const {
  std::vector<double> g(dim());
  gradient(w, g);
  return g;
}

void QuadraticProblem::gradient(std::span<const double> w, std::span<double> out) const {
  hessian_.apply(w, out);
  kernels::axpy(-1.0, h_, out);
}

QuadraticProblem QuadraticProblem::scaled(double c) const {
  std::vector<DenseSymmetric> blocks;
  for (const auto& b : hessian_.blocks()) {
    auto full = b.to_full();
    for (auto& x : full) x *= c;
    blocks.push_back(DenseSymmetric::from_full(b.dim(), full));
  }
  auto h = h_;
  for (auto& x : h) x *= c;
  return QuadraticProblem(std::move(blocks), std::move(h));
}

// ---- cases --------------------------------------------------------------------

std::vector<std::vector<double>> case_block_spectra(int case_id) {
  switch (case_id) {
    case 3: return {{1, 2, 3}, {99, 100, 101}, {4998, 4999, 5000}};
    case 4: return {{1, 99, 4998}, {2, 100, 4999}, {3, 101, 5000}};
    default: throw std::invalid_argument("case " + std::to_string(case_id) + " has no built-in spectrum");
  }
}

QuadraticProblem make_case(int case_id, std::uint64_t seed, const std::vector<std::string>& spectrum_files) {
  std::vector<std::vector<double>> spectra;
  if (case_id == 3 || case_id == 4) {
    spectra = case_block_spectra(case_id);
  } else if (case_id == 1 || case_id == 2) {
    constexpr std::size_t kBlocks = 4, kBlockDim = 25;
    if (spectrum_files.size() != kBlocks)
      throw std::invalid_argument("case " + std::to_string(case_id) + " needs " + std::to_string(kBlocks) +
                                  " per-block spectrum files, got " + std::to_string(spectrum_files.size()));
    for (std::size_t l = 0; l < kBlocks; ++l) {
      auto values = read_spectrum_csv(spectrum_files[l]);
      if (values.size() < kBlockDim)
        throw std::invalid_argument(spectrum_files[l] + ": " + std::to_string(values.size()) +
                                    " eigenvalues, need at least " + std::to_string(kBlockDim));
      auto rng = make_rng(seed, 1000 + l);
      // Partial Fisher-Yates: the first kBlockDim entries become the sample.
      for (std::size_t i = 0; i < kBlockDim; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, values.size() - 1);
        std::swap(values[i], values[pick(rng)]);
      }
      values.resize(kBlockDim);
      spectra.push_back(std::move(values));
    }
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : spectra)
      for (double v : s) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (!(hi > lo)) throw std::invalid_argument("case spectra are constant; cannot map onto [1, 5000]");
    for (auto& s : spectra)
      for (auto& v : s) v = 1.0 + (v - lo) * (4999.0 / (hi - lo));
  } else {
    throw std::invalid_argument("invalid case id " + std::to_string(case_id) + " (expected 1-4)");
  }

  std::vector<DenseSymmetric> blocks;
  std::size_t d = 0;
  for (std::size_t l = 0; l < spectra.size(); ++l) {
    auto rng = make_rng(seed, l);
    blocks.push_back(DenseSymmetric::random_rotation(spectra[l], rng));
    d += spectra[l].size();
  }
  return QuadraticProblem(std::move(blocks), std::vector<double>(d, 0.0));
}

QuadraticProblem hard_instance(double kappa) {
  std::vector<DenseSymmetric> blocks;
  blocks.push_back(DenseSymmetric::identity(1, 1.0));
  blocks.push_back(DenseSymmetric::identity(1, kappa));
  return QuadraticProblem(std::move(blocks), {0.0, 0.0});
}

std::vector<double> equal_energy_start(const QuadraticProblem& p) {
  const auto dense = p.hessian().to_dense();
  std::vector<double> w(p.dim());
  for (std::size_t i = 0; i < p.dim(); ++i) {
    for (std::size_t j = 0; j < p.dim(); ++j)
      if (i != j && dense(i, j) != 0.0) throw std::invalid_argument("equal_energy_start: Hessian is not diagonal");
    w[i] = p.minimizer()[i] + 1.0 / std::sqrt(dense(i, i));
  }
  return w;
}

// ---- optimizer configs --------------------------------------------------------

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::gd: return "gd";
    case OptimizerKind::adam_fixed: return "adam_fixed";
    case OptimizerKind::adam_ema: return "adam_ema";
  }
  return "gd";
}

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "gd") return OptimizerKind::gd;
  if (s == "adam_fixed") return OptimizerKind::adam_fixed;
  if (s == "adam_ema") return OptimizerKind::adam_ema;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("optimizer: eta must be positive and finite");
  switch (kind) {
    case OptimizerKind::gd:
      break;
    case OptimizerKind::adam_fixed:
      if (beta2 != 1.0) throw std::invalid_argument("adam_fixed requires beta2 = 1");
      break;
    case OptimizerKind::adam_ema:
      if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("adam_ema requires beta2 in [0, 1)");
      break;
  }
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diverged: return "diverged";
  }
  return "max_iters";
}

std::string_view to_string(GridStatus s) {
  switch (s) {
    case GridStatus::ok: return "ok";
    case GridStatus::none_converged: return "none_converged";
    case GridStatus::all_diverged: return "all_diverged";
  }
  return "ok";
}

std::optional<std::size_t> Trajectory::iterations_to(double target) const {
  for (std::size_t t = 0; t < loss_ratios.size(); ++t)
    if (loss_ratios[t] <= target) return t;
  return std::nullopt;
}

// ---- runs -----------------------------------------------------------------------

namespace {

constexpr double kDivergedRatio = 1e30;
constexpr std::size_t kSnapshotHead = 50, kSnapshotTail = 50, kSnapshotStride = 100;

// Drives an in-place update `step(w)` and records the trajectory.
template <class Step>
Trajectory iterate(const QuadraticProblem& p, const OptimizerConfig& cfg, std::span<const double> w0,
                   const RunOptions& opts, Step&& step) {
  if (w0.size() != p.dim()) throw std::invalid_argument("w0 has wrong length");
  Trajectory tr;
  tr.config = cfg;
  std::vector<double> w(w0.begin(), w0.end());
  const double e0 = p.excess_loss(w);
  if (!(e0 > 0.0)) throw std::invalid_argument("w0 is already optimal; loss ratio undefined");
  tr.initial_excess = e0;
  tr.loss_ratios.reserve(std::min<std::size_t>(opts.max_iters + 1, 1u << 20));
  tr.loss_ratios.push_back(1.0);
  std::deque<std::pair<std::size_t, std::vector<double>>> tail;
  if (opts.keep_snapshots) tr.snapshots.emplace_back(0, w);

  for (std::size_t t = 1; t <= opts.max_iters; ++t) {
    step(w);
    const double ratio = p.excess_loss(w) / e0;
    if (!std::isfinite(ratio) || ratio > kDivergedRatio) {
      tr.status = RunStatus::diverged;
      break;
    }
    tr.loss_ratios.push_back(ratio);
    tr.iterations = t;
    if (opts.keep_snapshots) {
      if (t < kSnapshotHead || t % kSnapshotStride == 0) {
        tr.snapshots.emplace_back(t, w);
      } else {
        tail.emplace_back(t, w);
        if (tail.size() > kSnapshotTail) tail.pop_front();
      }
    }
    if (opts.target > 0.0 && ratio <= opts.target) {
      tr.status = RunStatus::converged;
      break;
    }
  }
  if (opts.keep_snapshots) {
    for (auto& s : tail) tr.snapshots.push_back(std::move(s));
    std::sort(tr.snapshots.begin(), tr.snapshots.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  tr.final_iterate = std::move(w);
  return tr;
}

}  // namespace

double default_gd_eta(const QuadraticProblem& p) {
  return 2.0 / (p.eigenvalues().front() + p.eigenvalues().back());
}

Trajectory gd_run(const QuadraticProblem& p, std::optional<double> eta, std::span<const double> w0,
                  const RunOptions& opts) {
  OptimizerConfig cfg{OptimizerKind::gd, eta.value_or(default_gd_eta(p)), 1.0};
  cfg.validate();
  std::vector<double> g(p.dim());
  return iterate(p, cfg, w0, opts, [&](std::vector<double>& w) {
    p.gradient(w, g);
    kernels::axpy(-cfg.eta, g, w);
  });
}

std::vector<double> adam_fixed_preconditioner(const QuadraticProblem& p, std::span<const double> w0) {
  auto g = p.gradient(w0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0)
      throw std::domain_error("initial gradient coordinate " + std::to_string(i) +
                              " is zero; the frozen preconditioner would divide by zero");
    g[i] = std::abs(g[i]);
  }
  return g;
}

Trajectory adam_fixed_run(const QuadraticProblem& p, double eta, std::span<const double> w0, const RunOptions& opts) {
  OptimizerConfig cfg{OptimizerKind::adam_fixed, eta, 1.0};
  cfg.validate();
  const auto d = adam_fixed_preconditioner(p, w0);
  std::vector<double> g(p.dim());
  return iterate(p, cfg, w0, opts, [&](std::vector<double>& w) {
    p.gradient(w, g);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * (g[i] / d[i]);
  });
}

AdamEmaStepper::AdamEmaStepper(const QuadraticProblem& p, std::span<const double> w0, double eta, double beta2)
    : problem_(&p), w_(w0.begin(), w0.end()), g_(p.dim()), eta_(eta), beta2_(beta2) {
  OptimizerConfig{OptimizerKind::adam_ema, eta, beta2}.validate();
  if (w0.size() != p.dim()) throw std::invalid_argument("w0 has wrong length");
}

void AdamEmaStepper::step() {
  problem_->gradient(w_, g_);
  if (t_ == 0) {
    v_.resize(g_.size());
    for (std::size_t i = 0; i < g_.size(); ++i) v_[i] = g_[i] * g_[i];
  } else {
    for (std::size_t i = 0; i < g_.size(); ++i) v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * (g_[i] * g_[i]);
  }
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (v_[i] == 0.0) {
      ++skipped_;
      continue;
    }
    w_[i] -= eta_ * (g_[i] / std::sqrt(v_[i]));
  }
  ++t_;
}

Trajectory adam_ema_run(const QuadraticProblem& p, double eta, double beta2, std::span<const double> w0,
                        const RunOptions& opts) {
  OptimizerConfig cfg{OptimizerKind::adam_ema, eta, beta2};
  AdamEmaStepper stepper(p, w0, eta, beta2);
  auto tr = iterate(p, cfg, w0, opts, [&](std::vector<double>& w) {
    stepper.step();
    w = stepper.iterate();
  });
  tr.skipped_updates = stepper.skipped_updates();
  return tr;
}

Trajectory run_optimizer(const QuadraticProblem& p, const OptimizerConfig& cfg, std::span<const double> w0,
                         const RunOptions& opts) {
  switch (cfg.kind) {
    case OptimizerKind::gd: return gd_run(p, cfg.eta, w0, opts);
    case OptimizerKind::adam_fixed: return adam_fixed_run(p, cfg.eta, w0, opts);
    case OptimizerKind::adam_ema: return adam_ema_run(p, cfg.eta, cfg.beta2, w0, opts);
  }
  throw std::logic_error("unreachable");
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi >= lo) || n == 0) throw std::invalid_argument("log_grid: need 0 < lo <= hi and n > 0");
  if (n == 1) return {lo};
  std::vector<double> g(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

GridSearchResult grid_search(const QuadraticProblem& p, OptimizerKind kind, std::span<const double> etas,
                             std::span<const double> w0, const RunOptions& opts, double beta2, unsigned jobs) {
  if (etas.empty()) throw std::invalid_argument("grid_search: empty eta grid");
  GridSearchResult res;
  res.runs = parallel_map<Trajectory>(etas.size(), jobs, [&](std::size_t i) {
    OptimizerConfig cfg{kind, etas[i], kind == OptimizerKind::adam_ema ? beta2 : 1.0};
    return run_optimizer(p, cfg, w0, opts);
  });

  std::size_t diverged = 0;
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& r = res.runs[i];
    if (r.status == RunStatus::diverged) {
      ++diverged;
      continue;
    }
    if (r.status != RunStatus::converged) continue;
    const bool better = !res.best_iterations || r.iterations < *res.best_iterations ||
                        (r.iterations == *res.best_iterations && etas[i] < etas[*res.best]);
    if (better) {
      res.best = i;
      res.best_iterations = r.iterations;
    }
  }
  if (diverged == res.runs.size()) {
    res.status = GridStatus::all_diverged;
  } else if (!res.best) {
    res.status = GridStatus::none_converged;
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
      if (res.runs[i].status == RunStatus::diverged) continue;
      if (!res.best || res.runs[i].loss_ratios.back() < res.runs[*res.best].loss_ratios.back()) res.best = i;
    }
  }
  return res;
}

// ---- theory ---------------------------------------------------------------------

TheoryReport theory_report(const QuadraticProblem& p, std::span<const double> w0) {
  const auto g = p.gradient(w0);
  TheoryReport r;
  r.kappa = p.kappa();
  r.block_kappas = p.block_kappas();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] == 0.0)
      throw std::domain_error("theory_report: initial gradient coordinate " + std::to_string(i) + " is zero");
  double max_c2 = 0.0, min_c1 = INFINITY;
  for (std::size_t l = 0; l < p.partition().blocks(); ++l) {
    const auto range = p.partition().range(l);
    const double top = p.block_eigenvalues()[l].front();
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = range.begin; i < range.end; ++i) {
      lo = std::min(lo, std::abs(g[i]));
      hi = std::max(hi, std::abs(g[i]));
    }
    r.c1.push_back(lo / top);
    r.c2.push_back(hi / top);
    min_c1 = std::min(min_c1, lo / top);
    max_c2 = std::max(max_c2, hi / top);
  }
  r.r = (max_c2 * max_c2) / (min_c1 * min_c1);
  r.eta_theory = min_c1;
  r.eta_literal = INFINITY;
  for (double c : r.c1) r.eta_literal = std::min(r.eta_literal, 1.0 / c);
  r.gd_factor = 1.0 - 2.0 / (r.kappa + 1.0);
  r.adam_factor = 0.0;
  for (double k : r.block_kappas) r.adam_factor = std::max(r.adam_factor, 1.0 - 1.0 / (r.r * k));
  return r;
}

BoundVerification verify_bounds(const Trajectory& t, const TheoryReport& report, BoundKind which, double slack) {
  if (which == BoundKind::gd_lower && t.config.kind != OptimizerKind::gd)
    throw std::invalid_argument("verify_bounds: gd_lower needs a gd trajectory, got " + std::string(to_string(t.config.kind)));
  if (which == BoundKind::adam_upper && t.config.kind != OptimizerKind::adam_fixed)
    throw std::invalid_argument("verify_bounds: adam_upper needs an adam_fixed trajectory, got " +
                                std::string(to_string(t.config.kind)));
  if (t.loss_ratios.size() < 3) throw std::invalid_argument("verify_bounds: trajectory shorter than 2 steps");

  BoundVerification v;
  v.kind = which;
  v.slack = slack;
  v.bound = which == BoundKind::gd_lower ? report.gd_factor : report.adam_factor;
  v.min_factor = INFINITY;
  v.max_factor = -INFINITY;
  for (std::size_t k = 0; k + 1 < t.loss_ratios.size(); ++k) {
    if (t.loss_ratios[k] * t.initial_excess < 1e-280) break;
    const double f = t.loss_ratios[k + 1] / t.loss_ratios[k];
    v.step_factors.push_back(f);
    ++v.checked_steps;
    v.min_factor = std::min(v.min_factor, f);
    v.max_factor = std::max(v.max_factor, f);
    const bool bad = which == BoundKind::gd_lower ? f < v.bound - slack : f > v.bound + slack;
    if (bad) ++v.violations;
  }
  return v;
}

std::vector<double> direction_step_factors(const QuadraticProblem& p, const Trajectory& t) {
  const auto dense = p.hessian().to_dense();
  for (std::size_t i = 0; i < p.dim(); ++i)
    for (std::size_t j = 0; j < p.dim(); ++j)
      if (i != j && dense(i, j) != 0.0) throw std::invalid_argument("direction_step_factors: Hessian is not diagonal");
  const auto& ws = p.minimizer();
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < t.snapshots.size(); ++k) {
    const auto& [t0, a] = t.snapshots[k];
    const auto& [t1, b] = t.snapshots[k + 1];
    if (t1 != t0 + 1) continue;
    double best = -INFINITY;
    for (std::size_t i = 0; i < p.dim(); ++i) {
      const double e0 = a[i] - ws[i];
      if (std::abs(e0) < 1e-150) continue;
      const double q = (b[i] - ws[i]) / e0;
      best = std::max(best, q * q);
    }
    if (std::isfinite(best)) out.push_back(best);
  }
  if (out.empty()) throw std::invalid_argument("direction_step_factors: no consecutive snapshots");
  return out;
}

LimitCycleResult detect_limit_cycle(const Trajectory& t, std::size_t transient, std::size_t window) {
  if (window == 0) throw std::invalid_argument("detect_limit_cycle: window must be positive");
  if (t.loss_ratios.size() < transient + window)
    throw std::invalid_argument("detect_limit_cycle: trajectory has " + std::to_string(t.loss_ratios.size()) +
                                " points, need transient + window = " + std::to_string(transient + window));
  LimitCycleResult r;
  r.threshold = 1e-4 * t.config.eta * t.config.eta;
  r.tail_min_loss = INFINITY;
  for (std::size_t k = transient; k < transient + window; ++k)
    r.tail_min_loss = std::min(r.tail_min_loss, t.loss_ratios[k] * t.initial_excess);
  r.cycling = r.tail_min_loss > r.threshold;
  return r;
}

std::string format_theory_report(const TheoryReport& r) {
  std::ostringstream out;
  out << "kappa=" << format_double(r.kappa) << "\n";
  for (std::size_t l = 0; l < r.block_kappas.size(); ++l) out << "kappa_block." << l << "=" << format_double(r.block_kappas[l]) << "\n";
  for (std::size_t l = 0; l < r.c1.size(); ++l) out << "c1." << l << "=" << format_double(r.c1[l]) << "\n";
  for (std::size_t l = 0; l < r.c2.size(); ++l) out << "c2." << l << "=" << format_double(r.c2[l]) << "\n";
  out << "r=" << format_double(r.r) << "\n";
  out << "eta_theory=" << format_double(r.eta_theory) << "\n";
  out << "eta_literal=" << format_double(r.eta_literal) << "\n";
  out << "gd_factor=" << format_double(r.gd_factor) << "\n";
  out << "adam_factor=" << format_double(r.adam_factor) << "\n";
  return out.str();
}

TheoryReport parse_theory_report(const std::string& text) {
  std::map<std::string, double> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = parse_double(line.substr(eq + 1));
  }
  auto get = [&](const std::string& k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("theory report: missing key " + k);
    return it->second;
  };
  auto list = [&](const std::string& prefix) {
    std::vector<double> v;
    for (std::size_t l = 0;; ++l) {
      const auto it = kv.find(prefix + "." + std::to_string(l));
      if (it == kv.end()) break;
      v.push_back(it->second);
    }
    return v;
  };
  TheoryReport r;
  r.kappa = get("kappa");
  r.block_kappas = list("kappa_block");
  r.c1 = list("c1");
  r.c2 = list("c2");
  r.r = get("r");
  r.eta_theory = get("eta_theory");
  r.eta_literal = get("eta_literal");
  r.gd_factor = get("gd_factor");
  r.adam_factor = get("adam_factor");
  return r;
}

}  // namespace blockspec
