#include "blockspec/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"
#include "blockspec/density.hpp"
#include "blockspec/heterogeneity.hpp"
#include "blockspec/operator.hpp"
#include "blockspec/parallel.hpp"
#include "blockspec/quadlab.hpp"
#include "blockspec/rng.hpp"
#include "blockspec/slq.hpp"
#include "blockspec/svg.hpp"
#include "blockspec/toynet.hpp"

namespace blockspec {

namespace fs = std::filesystem;

namespace {

class Output {
 public:
  Output(const ExperimentManifest& m, ExperimentResult& r) : dir_(m.out_dir), result_(r) {
    if (dir_.empty()) throw std::invalid_argument("no output directory given");
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  // For writers that take a path themselves.
  std::string claim(const std::string& name) {
    result_.files.push_back(name);
    return path(name);
  }
  void write(const std::string& name, const std::string& content) { write_file_atomic(claim(name), content); }

 private:
  std::string dir_;
  ExperimentResult& result_;
};

// Resolves a config path relative to the config file's directory.
std::string resolve(const ExperimentManifest& m, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || m.config_path.empty()) return p;
  const auto base = fs::path(m.config_path).parent_path();
  const auto candidate = base / p;
  return fs::exists(candidate) ? candidate.string() : p;
}

std::vector<std::string> resolve_all(const ExperimentManifest& m, const std::vector<std::string>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(resolve(m, p));
  return out;
}

void start(const ExperimentManifest& m, Output& out, const std::set<std::string>& keys) {
  auto allowed = keys;
  allowed.insert("strict");
  m.config.require_known(allowed);
  out.write("manifest.txt", m.echo());
}

std::string fmt(double v) { return format_double(v); }

SlqParams slq_params(const ExperimentManifest& m, std::uint64_t seed) {
  SlqParams p = m.cheap ? SlqParams::cheap() : SlqParams{};
  p.steps = m.config.count("steps", p.steps);
  p.probes = m.config.count("probes", p.probes);
  p.sigma_fraction = m.config.number("sigma_fraction", p.sigma_fraction);
  p.grid_points = m.config.count("grid_points", p.grid_points);
  p.seed = seed;
  p.jobs = m.jobs;
  return p;
}

const std::set<std::string> kSlqKeys = {"steps", "probes", "sigma_fraction", "grid_points"};
const std::set<std::string> kSourceKeys = {"source", "case", "spectra", "matrix", "blocks", "dim",
                                           "hidden", "inputs", "samples", "separation", "noise"};

std::set<std::string> keys(std::initializer_list<std::set<std::string>> groups, std::set<std::string> extra) {
  for (const auto& g : groups) extra.insert(g.begin(), g.end());
  return extra;
}

// An operator with its block structure and labels.
struct Source {
  OperatorPtr op;
  BlockPartition partition;
  std::vector<std::string> labels;
  std::shared_ptr<const DenseSymmetric> dense;  // set when an explicit matrix exists
  std::vector<std::vector<double>> exact_blocks;  // per-block exact eigenvalues, when cheap to get
};

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < n; ++l) out.push_back("block" + std::to_string(l));
  return out;
}

Dataset blob_data(const ExperimentManifest& m, std::size_t inputs, std::uint64_t seed, double separation) {
  if (m.config.has("data")) {
    auto d = read_dataset_csv(resolve(m, m.config.text("data")));
    if (d.features() != inputs) throw std::invalid_argument("data file has " + std::to_string(d.features()) +
                                                            " features, config says inputs=" + std::to_string(inputs));
    return d;
  }
  return Dataset::blobs(m.config.count("samples", 200), inputs, m.config.number("separation", separation),
                        m.config.number("noise", 1.0), seed);
}

Source load_source(const ExperimentManifest& m, std::uint64_t seed) {
  const auto kind = m.config.text("source", "case");
  Source s;
  if (kind == "case") {
    const auto id = int(m.config.integer("case", 3));
    auto p = make_case(id, seed, resolve_all(m, m.config.list("spectra")));
    auto op = std::make_shared<BlockDiagonalOperator>(p.hessian());
    s.partition = op->partition();
    s.op = op;
    for (const auto& b : op->blocks()) s.exact_blocks.push_back(exact_eigenvalues(b));
  } else if (kind == "matrix" || kind == "random") {
    DenseSymmetric a;
    if (kind == "matrix") {
      a = read_matrix_csv(resolve(m, m.config.text("matrix")));
    } else {
      auto rng = make_rng(seed, 0);
      a = DenseSymmetric::random_gaussian(m.config.count("dim", 200), rng);
    }
    const auto sizes = m.config.counts("blocks", {a.dim()});
    s.partition = BlockPartition(sizes);
    if (s.partition.dim() != a.dim())
      throw std::invalid_argument("blocks sum to " + std::to_string(s.partition.dim()) + " but the matrix has dim " +
                                  std::to_string(a.dim()));
    s.dense = std::make_shared<DenseSymmetric>(std::move(a));
    s.op = s.dense;
  } else if (kind == "toynet") {
    const auto hidden = m.config.count("hidden", 8), inputs = m.config.count("inputs", 5);
    ToyNetModel model(hidden, inputs);
    const auto net = ToyNet::random(hidden, inputs, derive_seed(seed, 0));
    const auto data = blob_data(m, inputs, derive_seed(seed, 1), 6.0);
    auto snap = hessian_fd(model, net.flatten(), data, 1e-4, m.jobs);
    s.partition = snap.partition;
    s.labels = model.block_labels();
    s.dense = std::make_shared<DenseSymmetric>(std::move(snap.hessian));
    s.op = s.dense;
  } else {
    throw std::invalid_argument("unknown source '" + kind + "' (expected case, matrix, random or toynet)");
  }
  if (s.labels.empty()) s.labels = default_labels(s.partition.blocks());
  if (s.exact_blocks.empty() && s.dense && s.dense->dim() <= kMaxOracleDim)
    for (std::size_t l = 0; l < s.partition.blocks(); ++l)
      s.exact_blocks.push_back(exact_eigenvalues(s.dense->principal_block(s.partition.range(l))));
  return s;
}

std::string density_curve_svg(const std::vector<SpectralDensity>& ds, const std::vector<std::string>& labels,
                              const std::string& title) {
  std::vector<PlotSeries> series;
  for (std::size_t l = 0; l < ds.size(); ++l) series.push_back({labels[l], ds[l].grid, ds[l].values});
  return svg_line_plot(series, {title, "eigenvalue", "density", true});
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string ExperimentManifest::echo() const {
  std::ostringstream os;
  os << "subcommand=" << subcommand << "\n"
     << "config=" << config_path << "\n"
     << "out=" << out_dir << "\n"
     << "seed=" << seed << "\n"
     << "jobs=" << jobs << "\n"
     << "cheap=" << (cheap ? "true" : "false") << "\n"
     << "strict=" << (strict ? "true" : "false") << "\n"
     << "# config\n"
     << config.dump();
  return os.str();
}

int exit_code(const ExperimentManifest& m, const ExperimentResult& r) {
  const bool strict = m.strict || m.config.flag("strict", false);
  return (strict && !r.failures.empty()) ? 1 : 0;
}

// ---- spectrum -------------------------------------------------------------------

ExperimentResult run_spectrum(const ExperimentManifest& m) {
  ExperimentResult r;
  Output out(m, r);
  start(m, out, keys({kSlqKeys, kSourceKeys}, {"normalization", "svg", "data"}));

  const auto src = load_source(m, derive_seed(m.seed, 1));
  const auto mode = parse_normalization(m.config.text("normalization", "none"));
  const auto params = slq_params(m, derive_seed(m.seed, 2));
  const auto spectra = blockwise_densities(src.op, src.partition, params, mode);
  r.warnings.insert(r.warnings.end(), spectra.warnings.begin(), spectra.warnings.end());

  const auto& grid = spectra.densities.front().grid;
  const double sigma = spectra.densities.front().sigma;
  std::ostringstream summary;
  summary << "block,label,dim,scale,normalization,mass,l1_to_exact\n";
  for (std::size_t l = 0; l < src.partition.blocks(); ++l) {
    const auto& d = spectra.densities[l];
    write_density_csv(out.claim("density_block" + std::to_string(l) + ".csv"), d);
    double l1 = NAN;
    if (l < src.exact_blocks.size()) {
      std::vector<double> eigs = src.exact_blocks[l];
      for (auto& v : eigs) v /= spectra.scales[l].scale;
      const auto exact = smooth_eigenvalues(eigs, grid, sigma);
      write_density_csv(out.claim("exact_block" + std::to_string(l) + ".csv"), exact);
      l1 = l1_distance(d, exact);
    }
    summary << l << ',' << src.labels[l] << ',' << src.partition.sizes()[l] << ',' << fmt(spectra.scales[l].scale) << ','
            << to_string(spectra.scales[l].mode_used) << ',' << fmt(d.mass()) << ',' << fmt(l1) << '\n';
    r.summary.push_back(src.labels[l] + ": mass " + fmt(d.mass()) + (std::isnan(l1) ? "" : ", L1 to exact " + fmt(l1)));
  }
  out.write("summary.csv", summary.str());
  if (m.config.flag("svg", true)) out.write("overlay.svg", density_curve_svg(spectra.densities, src.labels, "spectral densities"));
  return r;
}

// ---- heatmap --------------------------------------------------------------------

namespace {

struct MlpSetup {
  std::vector<std::size_t> widths;
  std::size_t samples = 200;
  double separation = 3.0;
  double noise = 1.0;
};

MlpSetup mlp_setup(const ExperimentManifest& m) {
  MlpSetup s;
  s.widths = m.config.counts("widths", {8, 10, 10, 10, 1});
  s.samples = m.config.count("samples", 200);
  s.separation = m.config.number("separation", 3.0);
  s.noise = m.config.number("noise", 1.0);
  return s;
}

// js0 of a scaled MLP at initialization, from exact blocks of its FD Hessian.
double mlp_js0(const MlpSetup& s, double c, std::uint64_t seed, const ExactSpectraOptions& opts,
               std::vector<std::string>* warnings) {
  const auto net = scaled_mlp(s.widths, c, derive_seed(seed, 0));
  const auto data = Dataset::blobs(s.samples, s.widths.front(), s.separation, s.noise, derive_seed(seed, 1));
  const auto snap = hessian_fd(net.model, net.theta, data);
  return snapshot_heterogeneity(snap, net.model.block_labels(), opts, warnings).js0;
}

const std::set<std::string> kMlpKeys = {"widths", "samples", "separation", "noise", "c_values", "seeds"};

}  // namespace

ExperimentResult run_heatmap(const ExperimentManifest& m) {
  ExperimentResult r;
  Output out(m, r);
  start(m, out, keys({kSlqKeys, kSourceKeys, kMlpKeys}, {"normalization", "method", "svg", "data"}));

  const auto mode = parse_normalization(m.config.text("normalization", "tenth_largest"));
  ExactSpectraOptions exact_opts;
  exact_opts.normalization = mode;
  exact_opts.sigma_fraction = m.config.number("sigma_fraction", exact_opts.sigma_fraction);
  exact_opts.grid_points = m.config.count("grid_points", exact_opts.grid_points);
  const auto kind = m.config.text("source", "case");

  if (kind == "mlp") {
    const auto setup = mlp_setup(m);
    const auto cs = m.config.numbers("c_values", {1, 2, 4, 8});
    const std::size_t seeds = m.config.count("seeds", m.cheap ? 2 : 5);
    std::vector<std::vector<std::string>> warns(cs.size() * seeds);
    const auto js = parallel_map<double>(cs.size() * seeds, m.jobs, [&](std::size_t k) {
      return mlp_js0(setup, cs[k / seeds], derive_seed(m.seed, k % seeds), exact_opts, &warns[k]);
    });
    std::ostringstream all, med;
    all << "c,seed,js0\n";
    med << "c,median_js0\n";
    for (std::size_t i = 0; i < cs.size(); ++i) {
      std::vector<double> col(js.begin() + i * seeds, js.begin() + (i + 1) * seeds);
      for (std::size_t s = 0; s < seeds; ++s) all << fmt(cs[i]) << ',' << s << ',' << fmt(col[s]) << '\n';
      med << fmt(cs[i]) << ',' << fmt(median(col)) << '\n';
      r.summary.push_back("c=" + fmt(cs[i]) + " median js0=" + fmt(median(col)));
    }
    for (std::size_t k = 0; k < warns.size(); ++k)
      for (const auto& w : warns[k]) r.warnings.push_back("c=" + fmt(cs[k / seeds]) + " seed " + std::to_string(k % seeds) + ": " + w);
    out.write("js0_by_c.csv", all.str());
    out.write("js0_medians.csv", med.str());
    return r;
  }

  HeterogeneityReport report;
  std::vector<SpectralDensity> densities;
  if (kind == "eigenvalues") {
    const auto files = resolve_all(m, m.config.list("spectra"));
    if (files.size() < 2) throw std::invalid_argument("heatmap needs at least two spectra, got " + std::to_string(files.size()));
    std::vector<std::vector<double>> eigs;
    std::vector<std::string> labels;
    for (const auto& f : files) {
      eigs.push_back(read_spectrum_csv(f));
      labels.push_back(fs::path(f).stem().string());
    }
    std::vector<SpectrumScale> scales;
    densities = densities_from_eigenvalues(eigs, exact_opts, &scales);
    for (std::size_t l = 0; l < scales.size(); ++l)
      if (!scales[l].warning.empty()) r.warnings.push_back(labels[l] + ": " + scales[l].warning);
    report = pairwise_heatmap(densities, mode, labels, m.jobs);
  } else {
    const auto src = load_source(m, derive_seed(m.seed, 1));
    if (src.partition.blocks() < 2) throw std::invalid_argument("heatmap needs at least two blocks, source has one");
    const auto method = m.config.text("method", "slq");
    if (method == "slq") {
      auto spectra = blockwise_densities(src.op, src.partition, slq_params(m, derive_seed(m.seed, 2)), mode);
      r.warnings.insert(r.warnings.end(), spectra.warnings.begin(), spectra.warnings.end());
      densities = std::move(spectra.densities);
    } else if (method == "exact") {
      if (src.exact_blocks.empty()) throw std::invalid_argument("method=exact needs a source small enough for the exact solver");
      std::vector<SpectrumScale> scales;
      densities = densities_from_eigenvalues(src.exact_blocks, exact_opts, &scales);
      for (std::size_t l = 0; l < scales.size(); ++l)
        if (!scales[l].warning.empty()) r.warnings.push_back(src.labels[l] + ": " + scales[l].warning);
    } else {
      throw std::invalid_argument("unknown method '" + method + "' (expected slq or exact)");
    }
    report = pairwise_heatmap(densities, mode, src.labels, m.jobs);
  }

  write_heatmap_csv(out.claim("heatmap.csv"), report);
  out.write("js0.txt", js0_summary_line(report) + "\n");
  if (m.config.flag("svg", true)) out.write("heatmap.svg", svg_heatmap(report, "pairwise JS distance"));
  r.summary.push_back(js0_summary_line(report));
  return r;
}

// ---- quadlab --------------------------------------------------------------------

namespace {

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  os << "iter,loss_ratio\n";
  for (std::size_t k = 0; k < t.loss_ratios.size(); ++k) os << k << ',' << fmt(t.loss_ratios[k]) << '\n';
  return os.str();
}

struct SeedOutcome {
  std::vector<GridSearchResult> grids;  // one per optimizer
  TheoryReport theory;
  BoundVerification bound;
  bool theory_ok = false;
  std::string theory_error;
};

void quadlab_compare(const ExperimentManifest& m, Output& out, ExperimentResult& r) {
  const int case_id = int(m.config.integer("case", 3));
  const auto files = resolve_all(m, m.config.list("spectra"));
  const std::size_t seeds = m.config.count("seeds", m.cheap ? 4 : 20);
  std::vector<OptimizerKind> kinds;
  if (m.config.has("optimizer") && m.config.has("optimizers"))
    throw std::invalid_argument("set either optimizer or optimizers, not both");
  const auto names = m.config.has("optimizer") ? std::vector<std::string>{m.config.text("optimizer")}
                                               : m.config.list("optimizers", {"gd", "adam_fixed"});
  for (const auto& k : names) kinds.push_back(parse_optimizer(k));
  const double beta2 = m.config.number("beta2", 0.999);
  if (int(m.config.has("eta")) + int(m.config.has("eta_grid")) + int(m.config.has("eta_points")) > 1)
    throw std::invalid_argument("set only one of eta, eta_grid and eta_points");
  std::vector<double> etas;
  if (m.config.has("eta"))
    etas = {m.config.number("eta", 0.0)};
  else if (m.config.has("eta_grid"))
    etas = m.config.numbers("eta_grid");
  else
    etas = log_grid(m.config.number("eta_min", 1e-6), m.config.number("eta_max", 1.0),
                    m.config.count("eta_points", m.cheap ? 9 : 25));
  for (double eta : etas)
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("step sizes must be positive and finite");
  RunOptions opts;
  opts.target = m.config.number("target", 1e-6);
  opts.max_iters = m.config.count("max_iters", m.cheap ? 20000 : 100000);
  opts.keep_snapshots = false;
  const std::size_t theory_steps = m.config.count("theory_steps", m.cheap ? 1000 : 10000);

  const auto outcomes = parallel_map<SeedOutcome>(seeds, m.jobs, [&](std::size_t s) {
    const auto rs = derive_seed(m.seed, s);
    const auto p = make_case(case_id, rs, files);
    auto init = make_rng(rs, 5000);
    const auto w0 = gaussian_vector(init, p.dim());
    SeedOutcome o;
    for (auto k : kinds) o.grids.push_back(grid_search(p, k, etas, w0, opts, beta2));
    try {
      o.theory = theory_report(p, w0);
      RunOptions topts;
      topts.target = 0;
      topts.max_iters = theory_steps;
      topts.keep_snapshots = false;
      const auto t = adam_fixed_run(p, o.theory.eta_theory, w0, topts);
      o.bound = verify_bounds(t, o.theory, BoundKind::adam_upper);
      o.theory_ok = true;
    } catch (const std::domain_error& e) {
      o.theory_error = e.what();
    }
    return o;
  });

  std::ostringstream grid, best, theory;
  grid << "seed,optimizer,eta,status,iterations,final_ratio\n";
  best << "seed,optimizer,best_eta,grid_status,iterations\n";
  theory << "seed,r,eta_theory,eta_literal,gd_factor,adam_factor,checked_steps,max_factor,violations\n";
  std::vector<double> ratios;
  std::size_t violations = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto& o = outcomes[s];
    std::vector<double> iters(kinds.size(), NAN);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const auto& g = o.grids[k];
      const auto name = std::string(to_string(kinds[k]));
      for (std::size_t i = 0; i < g.runs.size(); ++i) {
        const auto& t = g.runs[i];
        const auto hit = t.iterations_to(opts.target);
        grid << s << ',' << name << ',' << fmt(etas[i]) << ',' << to_string(t.status) << ','
             << (hit ? std::to_string(*hit) : std::string("-1")) << ',' << fmt(t.loss_ratios.back()) << '\n';
      }
      best << s << ',' << name << ',' << (g.best ? fmt(etas[*g.best]) : std::string("nan")) << ','
           << to_string(g.status) << ',' << (g.best_iterations ? std::to_string(*g.best_iterations) : std::string("-1"))
           << '\n';
      if (g.status == GridStatus::all_diverged)
        r.failures.push_back("seed " + std::to_string(s) + " " + name + ": every grid run diverged");
      else if (g.status == GridStatus::none_converged)
        r.warnings.push_back("seed " + std::to_string(s) + " " + name + ": no grid run reached the target");
      if (g.best_iterations) iters[k] = double(*g.best_iterations);
      if (g.best && s == 0) out.write("trajectory_seed0_" + name + ".csv", trajectory_csv(g.runs[*g.best]));
    }
    if (kinds.size() >= 2 && std::isfinite(iters[0]) && std::isfinite(iters[1]) && iters[1] > 0)
      ratios.push_back(iters[0] / iters[1]);
    if (o.theory_ok) {
      const auto& t = o.theory;
      theory << s << ',' << fmt(t.r) << ',' << fmt(t.eta_theory) << ',' << fmt(t.eta_literal) << ',' << fmt(t.gd_factor)
             << ',' << fmt(t.adam_factor) << ',' << o.bound.checked_steps << ',' << fmt(o.bound.max_factor) << ','
             << o.bound.violations << '\n';
      violations += o.bound.violations;
    } else {
      r.warnings.push_back("seed " + std::to_string(s) + ": theory skipped: " + o.theory_error);
    }
  }
  out.write("grid.csv", grid.str());
  out.write("best.csv", best.str());
  out.write("theory.csv", theory.str());

  std::ostringstream summary;
  summary << "metric,value\n";
  if (!ratios.empty()) {
    summary << "median_iteration_ratio," << fmt(median(ratios)) << '\n';
    r.summary.push_back("median iterations(" + std::string(to_string(kinds[0])) + ")/iterations(" +
                        std::string(to_string(kinds[1])) + ") = " + fmt(median(ratios)) + " over " +
                        std::to_string(ratios.size()) + " seeds");
  }
  summary << "bound_violations," << violations << '\n';
  out.write("summary.csv", summary.str());
  r.summary.push_back("adam_fixed contraction-bound violations: " + std::to_string(violations));
  if (violations > 0) r.failures.push_back(std::to_string(violations) + " contraction-bound violations");

  if (m.config.flag("svg", true)) {
    std::vector<PlotSeries> series;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const auto& g = outcomes.front().grids[k];
      if (!g.best) continue;
      const auto& t = g.runs[*g.best];
      PlotSeries ps{std::string(to_string(kinds[k])), {}, t.loss_ratios};
      for (std::size_t i = 0; i < t.loss_ratios.size(); ++i) ps.x.push_back(double(i));
      series.push_back(std::move(ps));
    }
    out.write("curves.svg", svg_line_plot(series, {"best-of-grid runs, seed 0", "iteration", "loss ratio", true}));
  }
}

void quadlab_limit_cycle(const ExperimentManifest& m, Output& out, ExperimentResult& r) {
  const auto betas = m.config.numbers("beta2_values", {0.0, 0.99});
  const auto etas = m.config.numbers("etas", {0.1, 0.01});
  const double lambda = m.config.number("lambda", 1.0);
  const std::size_t transient = m.config.count("transient", 10000);
  const std::size_t window = m.config.count("window", 10000);
  const QuadraticProblem p({DenseSymmetric::diagonal(std::vector<double>{lambda})}, {0.0});

  std::ostringstream os;
  os << "beta2,eta,w0,cycling,tail_min_loss,threshold\n";
  const auto results = parallel_map<std::pair<double, LimitCycleResult>>(betas.size() * etas.size(), m.jobs, [&](std::size_t k) {
    const double b = betas[k / etas.size()], eta = etas[k % etas.size()];
    const double w0 = m.config.number("w0", eta / 2);
    RunOptions o;
    o.target = 0;
    o.max_iters = transient + window;
    o.keep_snapshots = false;
    const std::vector<double> start{w0};
    const auto t = adam_ema_run(p, eta, b, start, o);
    return std::make_pair(w0, detect_limit_cycle(t, transient, window));
  });
  for (std::size_t k = 0; k < results.size(); ++k) {
    const double b = betas[k / etas.size()], eta = etas[k % etas.size()];
    const auto& [w0, lc] = results[k];
    os << fmt(b) << ',' << fmt(eta) << ',' << fmt(w0) << ',' << (lc.cycling ? "true" : "false") << ','
       << fmt(lc.tail_min_loss) << ',' << fmt(lc.threshold) << '\n';
    r.summary.push_back("beta2=" + fmt(b) + " eta=" + fmt(eta) + ": cycling=" + (lc.cycling ? "true" : "false") +
                        " tail_min=" + fmt(lc.tail_min_loss));
  }
  out.write("limit_cycle.csv", os.str());
}

void quadlab_hard_instance(const ExperimentManifest& m, Output& out, ExperimentResult& r) {
  const auto p = hard_instance(m.config.number("kappa", 5000.0));
  const auto w0 = equal_energy_start(p);
  const auto report = theory_report(p, w0);
  const auto etas = log_grid(m.config.number("eta_min", 1e-6), m.config.number("eta_max", 1e-2),
                             m.config.count("eta_points", m.cheap ? 20 : 200));
  RunOptions o;
  o.target = 0;
  o.max_iters = m.config.count("max_iters", m.cheap ? 2000 : 20000);
  struct HardCheck {
    BoundVerification v;
    double direction_max = 0.0;
  };
  const auto checks = parallel_map<HardCheck>(etas.size(), m.jobs, [&](std::size_t i) {
    const auto t = gd_run(p, etas[i], w0, o);
    const auto d = direction_step_factors(p, t);
    return HardCheck{verify_bounds(t, report, BoundKind::gd_lower), *std::max_element(d.begin(), d.end())};
  });
  std::ostringstream os;
  os << "eta,max_direction_factor,max_factor,min_factor,checked_steps,step_violations,bound,below_bound\n";
  std::size_t failing = 0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const auto& v = checks[i].v;
    const bool below = checks[i].direction_max < v.bound - v.slack;
    failing += below;
    os << fmt(etas[i]) << ',' << fmt(checks[i].direction_max) << ',' << fmt(v.max_factor) << ','
       << fmt(v.min_factor) << ',' << v.checked_steps << ',' << v.violations << ',' << fmt(v.bound) << ','
       << (below ? "true" : "false") << '\n';
  }
  out.write("gd_lower.csv", os.str());
  out.write("theory.txt", format_theory_report(report));
  r.summary.push_back(std::to_string(failing) + " of " + std::to_string(etas.size()) +
                      " step sizes have a max per-direction step factor below " + fmt(report.gd_factor));
  if (failing) r.failures.push_back(std::to_string(failing) + " step sizes fall below the GD lower bound");
}

}  // namespace

ExperimentResult run_quadlab(const ExperimentManifest& m) {
  ExperimentResult r;
  Output out(m, r);
  start(m, out, {"mode", "case", "spectra", "seeds", "optimizers", "beta2", "eta_min", "eta_max", "eta_points",
                 "target", "max_iters", "theory_steps", "svg", "optimizer", "eta", "eta_grid", "beta2_values", "etas", "lambda", "transient",
                 "window", "w0", "kappa"});
  const auto mode = m.config.text("mode", "compare");
  if (mode == "compare")
    quadlab_compare(m, out, r);
  else if (mode == "limit_cycle")
    quadlab_limit_cycle(m, out, r);
  else if (mode == "hard_instance")
    quadlab_hard_instance(m, out, r);
  else
    throw std::invalid_argument("unknown quadlab mode '" + mode + "' (expected compare, limit_cycle or hard_instance)");
  return r;
}

// ---- toynet ---------------------------------------------------------------------

namespace {

TrainConfig train_config(const ExperimentManifest& m, std::uint64_t seed) {
  TrainConfig c;
  c.optimizer = parse_train_optimizer(m.config.text("optimizer", "adam"));
  c.lr = m.config.number("lr", 1e-3);
  c.momentum = m.config.number("momentum", c.momentum);
  c.steps = m.config.count("train_steps", m.cheap ? 400 : 2000);
  c.batch_size = m.config.count("batch_size", 32);
  c.seed = seed;
  return c;
}

struct GapOutcome {
  double js0 = NAN;
  double sgd = 0.0, adam = 0.0;
  std::size_t diverged = 0;
};

void toynet_mlp(const ExperimentManifest& m, Output& out, ExperimentResult& r) {
  const auto setup = mlp_setup(m);
  const auto cs = m.config.numbers("c_values", {1, 2, 4, 8});
  const std::size_t seeds = m.config.count("seeds", m.cheap ? 2 : 5);
  const auto sgd_lrs = m.config.numbers("sgd_lrs", {1e-3, 1e-2, 1e-1});
  const auto adam_lrs = m.config.numbers("adam_lrs", {1e-3, 1e-2, 1e-1});
  const std::size_t steps = m.config.count("train_steps", m.cheap ? 100 : 500);
  const std::size_t batch = m.config.count("batch_size", 32);
  ExactSpectraOptions opts;
  opts.normalization = parse_normalization(m.config.text("normalization", "tenth_largest"));

  std::vector<std::vector<std::string>> warns(cs.size() * seeds);
  const auto res = parallel_map<GapOutcome>(cs.size() * seeds, m.jobs, [&](std::size_t k) {
    const double c = cs[k / seeds];
    const auto rs = derive_seed(m.seed, k % seeds);
    GapOutcome g;
    g.js0 = mlp_js0(setup, c, rs, opts, &warns[k]);
    const auto net = scaled_mlp(setup.widths, c, derive_seed(rs, 0));
    const auto data = Dataset::blobs(setup.samples, setup.widths.front(), setup.separation, setup.noise, derive_seed(rs, 1));
    for (int opt = 0; opt < 2; ++opt) {
      const auto& lrs = opt == 0 ? sgd_lrs : adam_lrs;
      for (double lr : lrs) {
        TrainConfig tc;
        tc.optimizer = opt == 0 ? TrainOptimizer::sgd : TrainOptimizer::adam;
        tc.lr = lr;
        tc.steps = steps;
        tc.batch_size = batch;
        tc.seed = derive_seed(rs, 2);
        const auto t = train(net.model, net.theta, data, tc);
        if (t.diverged) {
          ++g.diverged;
          continue;
        }
        double& best = opt == 0 ? g.sgd : g.adam;
        best = std::max(best, t.accuracy.back());
      }
    }
    return g;
  });

  std::ostringstream all, med;
  all << "c,seed,js0,sgd_best_accuracy,adam_best_accuracy,gap,diverged_runs\n";
  med << "c,median_js0,median_sgd_accuracy,median_adam_accuracy,median_gap\n";
  for (std::size_t i = 0; i < cs.size(); ++i) {
    std::vector<double> js, sg, ad, gap;
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto& g = res[i * seeds + s];
      all << fmt(cs[i]) << ',' << s << ',' << fmt(g.js0) << ',' << fmt(g.sgd) << ',' << fmt(g.adam) << ','
          << fmt(g.adam - g.sgd) << ',' << g.diverged << '\n';
      js.push_back(g.js0);
      sg.push_back(g.sgd);
      ad.push_back(g.adam);
      gap.push_back(g.adam - g.sgd);
    }
    med << fmt(cs[i]) << ',' << fmt(median(js)) << ',' << fmt(median(sg)) << ',' << fmt(median(ad)) << ','
        << fmt(median(gap)) << '\n';
    r.summary.push_back("c=" + fmt(cs[i]) + ": median js0 " + fmt(median(js)) + ", median adam-sgd gap " + fmt(median(gap)));
  }
  for (std::size_t k = 0; k < warns.size(); ++k)
    for (const auto& w : warns[k]) r.warnings.push_back("c=" + fmt(cs[k / seeds]) + " seed " + std::to_string(k % seeds) + ": " + w);
  out.write("mlp_runs.csv", all.str());
  out.write("mlp_summary.csv", med.str());
}

void toynet_train(const ExperimentManifest& m, Output& out, ExperimentResult& r) {
  const auto hidden = m.config.count("hidden", 8), inputs = m.config.count("inputs", 5);
  ToyNetModel model(hidden, inputs);
  const auto net = ToyNet::random(hidden, inputs, derive_seed(m.seed, 0));
  const auto data = blob_data(m, inputs, derive_seed(m.seed, 1), 6.0);
  auto cfg = train_config(m, derive_seed(m.seed, 2));
  cfg.snapshot_stride = m.config.count("snapshot_stride", m.cheap ? 200 : 500);
  cfg.snapshot_samples = m.config.count("snapshot_samples", 0);
  ExactSpectraOptions opts;
  opts.normalization = parse_normalization(m.config.text("normalization", "tenth_largest"));

  const auto t = train(model, net.flatten(), data, cfg);
  write_curve_csv(out.claim("curve.csv"), t);
  if (t.diverged) r.failures.push_back("training diverged after " + std::to_string(t.loss.size()) + " evaluations");

  const auto labels = model.block_labels();
  std::ostringstream os;
  os << "step,offdiag_mass_ratio,js0,asymmetry\n";
  std::vector<double> ratios;
  for (const auto& s : t.snapshots) {
    const double ratio = offdiag_mass_ratio(s.hessian, s.partition);
    std::vector<std::string> warns;
    const auto h = snapshot_heterogeneity(s, labels, opts, &warns);
    for (const auto& w : warns) r.warnings.push_back("step " + std::to_string(s.step) + ": " + w);
    os << s.step << ',' << fmt(ratio) << ',' << fmt(h.js0) << ',' << fmt(s.asymmetry) << '\n';
    ratios.push_back(ratio);
  }
  out.write("snapshots.csv", os.str());

  if (!t.snapshots.empty() && m.config.flag("snapshot_densities", true)) {
    const auto& last = t.snapshots.back();
    const auto ds = densities_from_eigenvalues(block_spectra(last), opts);
    for (std::size_t l = 0; l < ds.size(); ++l)
      write_density_csv(out.claim("snapshot_step" + std::to_string(last.step) + "_" + labels[l] + ".csv"), ds[l]);
  }

  r.summary.push_back("final loss " + fmt(t.loss.back()) + ", accuracy " + fmt(t.accuracy.back()) +
                      ", mean confidence " + fmt(mean_confidence(model, t.theta, data)));
  if (ratios.size() >= 2)
    r.summary.push_back("offdiag mass ratio " + fmt(ratios.front()) + " -> " + fmt(ratios.back()) + " (end/start " +
                        fmt(ratios.back() / ratios.front()) + ")");

  if (m.config.flag("svg", true)) {
    PlotSeries loss{"loss", {}, t.loss};
    for (std::size_t i = 0; i < t.loss.size(); ++i) loss.x.push_back(double(i));
    out.write("curve.svg", svg_line_plot({loss}, {"training loss", "step", "loss", true}));
  }
}

}  // namespace

ExperimentResult run_toynet(const ExperimentManifest& m) {
  ExperimentResult r;
  Output out(m, r);
  start(m, out, keys({kMlpKeys}, {"task", "hidden", "inputs", "data", "optimizer", "lr", "momentum", "train_steps",
                                  "batch_size", "snapshot_stride", "snapshot_samples", "normalization",
                                  "snapshot_densities", "svg", "sgd_lrs", "adam_lrs"}));
  const auto task = m.config.text("task", "train");
  if (task == "train")
    toynet_train(m, out, r);
  else if (task == "mlp")
    toynet_mlp(m, out, r);
  else
    throw std::invalid_argument("unknown toynet task '" + task + "' (expected train or mlp)");
  return r;
}

ExperimentResult run_experiment(const ExperimentManifest& m) {
  if (m.subcommand == "spectrum") return run_spectrum(m);
  if (m.subcommand == "heatmap") return run_heatmap(m);
  if (m.subcommand == "quadlab") return run_quadlab(m);
  if (m.subcommand == "toynet") return run_toynet(m);
  throw std::invalid_argument("unknown subcommand '" + m.subcommand + "'");
}

}  // namespace blockspec
