#include "blockspec/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"
#include "blockspec/kernels.hpp"
#include "blockspec/parallel.hpp"
#include "blockspec/rng.hpp"

namespace blockspec {

namespace {

// sech^2(a), which keeps its tiny tail where 1 - tanh(a)^2 rounds to zero.
double dtanh(double a) {
  const double e = std::exp(-2.0 * std::abs(a));
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

std::runtime_error non_finite(std::size_t sample) {
  return std::runtime_error("non-finite activation at sample " + std::to_string(sample));
}

// Resolves an empty index list to "every sample".
std::vector<std::size_t> resolve_indices(const Dataset& data, std::span<const std::size_t> indices) {
  if (data.size() == 0) throw std::invalid_argument("loss_grad: empty batch");
  if (!indices.empty()) {
    for (auto i : indices)
      if (i >= data.size()) throw std::out_of_range("loss_grad: sample index out of range");
    return {indices.begin(), indices.end()};
  }
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

void check_features(const Dataset& data, std::size_t expected) {
  if (data.features() != expected)
    throw std::invalid_argument("dataset has " + std::to_string(data.features()) + " features, model expects " +
                                std::to_string(expected));
}

}  // namespace

// ---- data -------------------------------------------------------------------

void Dataset::validate() const {
  if (samples.empty()) throw std::invalid_argument("dataset is empty");
  const std::size_t d = features();
  if (d == 0) throw std::invalid_argument("dataset has no features");
  bool pos = false, neg = false;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.x.size() != d) throw std::invalid_argument("sample " + std::to_string(k) + " has the wrong width");
    for (double v : s.x)
      if (!std::isfinite(v)) throw std::invalid_argument("sample " + std::to_string(k) + " has a non-finite feature");
    if (s.y == 1.0)
      pos = true;
    else if (s.y == -1.0)
      neg = true;
    else
      throw std::invalid_argument("sample " + std::to_string(k) + " label must be +1 or -1");
  }
  if (!pos || !neg) throw std::invalid_argument("dataset needs both classes");
}

Dataset Dataset::blobs(std::size_t n, std::size_t features, double separation, double noise, std::uint64_t seed) {
  if (n < 2 || features == 0) throw std::invalid_argument("blobs: need n >= 2 and features >= 1");
  auto dir_rng = make_rng(seed, 0);
  auto e = gaussian_vector(dir_rng, features);
  const double norm = std::sqrt(kernels::dot(e, e));
  for (auto& v : e) v /= norm;

  auto rng = make_rng(seed, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& s = d.samples[k];
    s.y = (k % 2 == 0) ? 1.0 : -1.0;
    s.x.resize(features);
    for (std::size_t j = 0; j < features; ++j) s.x[j] = s.y * 0.5 * separation * e[j] + noise * gauss(rng);
  }
  return d;
}

void write_dataset_csv(const std::string& path, const Dataset& d) {
  std::ostringstream os;
  for (std::size_t j = 0; j < d.features(); ++j) os << 'f' << j << ',';
  os << "label\n";
  for (const auto& s : d.samples) {
    for (double v : s.x) os << format_double(v) << ',';
    os << format_double(s.y) << '\n';
  }
  write_file_atomic(path, os.str());
}

Dataset read_dataset_csv(const std::string& path) {
  const auto t = read_csv(path, true);
  if (t.header.size() < 2 || t.header.back() != "label")
    throw std::runtime_error(path + ": expected feature columns followed by 'label'");
  Dataset d;
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw std::runtime_error(path + ": ragged row");
    Sample s;
    for (std::size_t j = 0; j + 1 < row.size(); ++j) s.x.push_back(parse_double(row[j]));
    s.y = parse_double(row.back());
    d.samples.push_back(std::move(s));
  }
  d.validate();
  return d;
}

double softplus_neg(double z) {
  // log(1 + e^{-z})
  if (z > 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---- ToyNet -----------------------------------------------------------------

std::vector<double> ToyNet::flatten() const {
  std::vector<double> theta;
  theta.reserve(dim());
  for (const auto& wi : w) theta.insert(theta.end(), wi.begin(), wi.end());
  theta.insert(theta.end(), v.begin(), v.end());
  return theta;
}

ToyNet ToyNet::unflatten(std::size_t hidden, std::size_t inputs, std::span<const double> theta) {
  if (hidden == 0 || inputs == 0) throw std::invalid_argument("ToyNet: widths must be positive");
  if (theta.size() != hidden * inputs + hidden)
    throw std::invalid_argument("ToyNet: parameter vector has the wrong length");
  ToyNet net;
  net.hidden = hidden;
  net.inputs = inputs;
  net.w.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) net.w[i].assign(theta.begin() + i * inputs, theta.begin() + (i + 1) * inputs);
  net.v.assign(theta.begin() + hidden * inputs, theta.end());
  return net;
}

ToyNet ToyNet::random(std::size_t hidden, std::size_t inputs, std::uint64_t seed) {
  if (hidden == 0 || inputs == 0) throw std::invalid_argument("ToyNet: widths must be positive");
  auto rng = make_rng(seed, 0);
  auto theta = gaussian_vector(rng, hidden * inputs + hidden);
  const double sw = 1.0 / std::sqrt(double(inputs)), sv = 1.0 / std::sqrt(double(hidden));
  for (std::size_t k = 0; k < theta.size(); ++k) theta[k] *= (k < hidden * inputs) ? sw : sv;
  return unflatten(hidden, inputs, theta);
}

double ToyNet::output(std::span<const double> x) const {
  double f = 0.0;
  for (std::size_t i = 0; i < hidden; ++i) f += v[i] * std::tanh(kernels::dot(w[i], x));
  return f;
}

double ToyNetModel::logit(std::span<const double> theta, std::span<const double> x) const {
  if (theta.size() != dim()) throw std::invalid_argument("ToyNetModel: parameter vector has the wrong length");
  double f = 0.0;
  const double* v = theta.data() + hidden_ * inputs_;
  for (std::size_t i = 0; i < hidden_; ++i) f += v[i] * std::tanh(kernels::dot(theta.subspan(i * inputs_, inputs_), x));
  return f;
}

LossGrad ToyNetModel::loss_grad(std::span<const double> theta, const Dataset& data,
                                std::span<const std::size_t> indices) const {
  if (theta.size() != dim()) throw std::invalid_argument("ToyNetModel: parameter vector has the wrong length");
  check_features(data, inputs_);
  const auto idx = resolve_indices(data, indices);
  LossGrad out;
  out.grad.assign(dim(), 0.0);
  const double* v = theta.data() + hidden_ * inputs_;
  double* gv = out.grad.data() + hidden_ * inputs_;
  std::vector<double> a(hidden_), h(hidden_);
  for (auto k : idx) {
    const auto& s = data.samples[k];
    double f = 0.0;
    for (std::size_t i = 0; i < hidden_; ++i) {
      a[i] = kernels::dot(theta.subspan(i * inputs_, inputs_), s.x);
      h[i] = std::tanh(a[i]);
      f += v[i] * h[i];
    }
    if (!std::isfinite(f)) throw non_finite(k);
    out.loss += softplus_neg(s.y * f);
    const double dldf = -s.y * logistic(-s.y * f);
    for (std::size_t i = 0; i < hidden_; ++i) {
      gv[i] += dldf * h[i];
      kernels::axpy(dldf * v[i] * dtanh(a[i]), s.x, std::span(out.grad).subspan(i * inputs_, inputs_));
    }
  }
  const double inv = 1.0 / double(idx.size());
  out.loss *= inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

BlockPartition ToyNetModel::partition() const {
  std::vector<std::size_t> sizes(hidden_, inputs_);
  sizes.push_back(hidden_);
  return BlockPartition(std::move(sizes));
}

std::vector<std::string> ToyNetModel::block_labels() const {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < hidden_; ++i) labels.push_back("w" + std::to_string(i));
  labels.push_back("v");
  return labels;
}

LossGrad loss_grad(const ToyNet& net, const Dataset& batch) {
  return ToyNetModel(net.hidden, net.inputs).loss_grad(net.flatten(), batch);
}

std::vector<double> eq1_offdiag_block(const ToyNet& net, const Sample& sample, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("eq1_offdiag_block: i == j (diagonal blocks carry extra terms)");
  if (i >= net.hidden || j >= net.hidden) throw std::out_of_range("eq1_offdiag_block: neuron index out of range");
  if (sample.x.size() != net.inputs) throw std::invalid_argument("eq1_offdiag_block: sample width mismatch");
  const double p = logistic(sample.y * net.output(sample.x));
  const double di = dtanh(kernels::dot(net.w[i], sample.x));
  const double dj = dtanh(kernels::dot(net.w[j], sample.x));
  const double coef = p * (1.0 - p) * net.v[i] * net.v[j] * di * dj;
  const std::size_t d = net.inputs;
  std::vector<double> block(d * d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) block[r * d + c] = coef * sample.x[r] * sample.x[c];
  return block;
}

// ---- finite-difference Hessian ----------------------------------------------

HessianSnapshot hessian_fd(const GradientFn& grad, std::span<const double> theta, BlockPartition partition,
                           double rel_step, unsigned jobs) {
  const std::size_t n = theta.size();
  if (n == 0) throw std::invalid_argument("hessian_fd: empty parameter vector");
  if (n > kMaxFdDim)
    throw std::invalid_argument("hessian_fd: dimension " + std::to_string(n) + " exceeds " +
                                std::to_string(kMaxFdDim));
  if (partition.dim() != n) throw std::invalid_argument("hessian_fd: partition does not cover the parameters");
  if (!(rel_step > 0)) throw std::invalid_argument("hessian_fd: step must be positive");

  // columns[j] = dg/dtheta_j
  auto columns = parallel_map<std::vector<double>>(n, jobs, [&](std::size_t j) {
    std::vector<double> t(theta.begin(), theta.end());
    const double h = rel_step * (1.0 + std::abs(theta[j]));
    t[j] = theta[j] + h;
    const double hp = t[j] - theta[j];
    auto gp = grad(t);
    t[j] = theta[j] - h;
    const double hm = theta[j] - t[j];
    auto gm = grad(t);
    if (gp.size() != n || gm.size() != n) throw std::runtime_error("hessian_fd: gradient has the wrong length");
    std::vector<double> col(n);
    const double inv = 1.0 / (hp + hm);
    for (std::size_t i = 0; i < n; ++i) col[i] = (gp[i] - gm[i]) * inv;
    return col;
  });

  HessianSnapshot s;
  s.hessian = DenseSymmetric(n);
  s.partition = std::move(partition);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double a = columns[j][i], b = columns[i][j];
      s.asymmetry = std::max(s.asymmetry, std::abs(a - b));
      s.hessian.set(i, j, 0.5 * (a + b));
    }
  return s;
}

HessianSnapshot hessian_fd(const Model& model, std::span<const double> theta, const Dataset& batch,
                           double rel_step, unsigned jobs) {
  GradientFn g = [&](std::span<const double> t) { return model.loss_grad(t, batch).grad; };
  return hessian_fd(g, theta, model.partition(), rel_step, jobs);
}

double offdiag_mass_ratio(const DenseSymmetric& m, const BlockPartition& partition) {
  if (partition.dim() != m.dim()) throw std::invalid_argument("offdiag_mass_ratio: partition does not match matrix");
  double total = 0.0, off = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const std::size_t bi = partition.block_of(i);
    for (std::size_t j = 0; j < m.dim(); ++j) {
      const double a = m(i, j);
      total += a * a;
      if (partition.block_of(j) != bi) off += a * a;
    }
  }
  if (!(total > 0)) throw std::domain_error("offdiag_mass_ratio: zero matrix");
  return std::clamp(off / total, 0.0, 1.0);
}

// ---- layer-scaled MLP ---------------------------------------------------------

MlpModel::MlpModel(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() != 5) throw std::invalid_argument("MlpModel: need 5 widths (inputs, 3 hidden, output)");
  if (widths_.back() != 1) throw std::invalid_argument("MlpModel: output width must be 1");
  for (auto w : widths_)
    if (w == 0) throw std::invalid_argument("MlpModel: widths must be positive");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weight_offset_.push_back(dim_);
    dim_ += widths_[l + 1] * widths_[l];
    bias_offset_.push_back(dim_);
    dim_ += widths_[l + 1];
  }
}

double MlpModel::logit(std::span<const double> theta, std::span<const double> x) const {
  if (theta.size() != dim_) throw std::invalid_argument("MlpModel: parameter vector has the wrong length");
  std::vector<double> z(x.begin(), x.end()), next;
  const std::size_t layers = widths_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    next.assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      next[r] = kernels::dot(theta.subspan(weight_offset_[l] + r * in, in), z) + theta[bias_offset_[l] + r];
      if (l + 1 < layers) next[r] = std::tanh(next[r]);
    }
    z.swap(next);
  }
  return z[0];
}

LossGrad MlpModel::loss_grad(std::span<const double> theta, const Dataset& data,
                             std::span<const std::size_t> indices) const {
  if (theta.size() != dim_) throw std::invalid_argument("MlpModel: parameter vector has the wrong length");
  check_features(data, widths_[0]);
  const auto idx = resolve_indices(data, indices);
  const std::size_t layers = widths_.size() - 1;
  LossGrad out;
  out.grad.assign(dim_, 0.0);
  std::span<double> g(out.grad);
  std::vector<std::vector<double>> z(layers + 1), pre(layers + 1);
  std::vector<double> delta, prev;
  for (auto k : idx) {
    const auto& s = data.samples[k];
    z[0] = s.x;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = widths_[l], o = widths_[l + 1];
      z[l + 1].assign(o, 0.0);
      pre[l + 1].assign(o, 0.0);
      for (std::size_t r = 0; r < o; ++r) {
        const double a = kernels::dot(theta.subspan(weight_offset_[l] + r * in, in), z[l]) + theta[bias_offset_[l] + r];
        pre[l + 1][r] = a;
        z[l + 1][r] = (l + 1 < layers) ? std::tanh(a) : a;
      }
    }
    const double f = z[layers][0];
    if (!std::isfinite(f)) throw non_finite(k);
    out.loss += softplus_neg(s.y * f);
    delta.assign(1, -s.y * logistic(-s.y * f));
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = widths_[l], o = widths_[l + 1];
      for (std::size_t r = 0; r < o; ++r) {
        kernels::axpy(delta[r], z[l], g.subspan(weight_offset_[l] + r * in, in));
        g[bias_offset_[l] + r] += delta[r];
      }
      if (l == 0) break;
      prev.assign(in, 0.0);
      for (std::size_t r = 0; r < o; ++r) kernels::axpy(delta[r], theta.subspan(weight_offset_[l] + r * in, in), prev);
      for (std::size_t c = 0; c < in; ++c) prev[c] *= dtanh(pre[l][c]);
      delta.swap(prev);
    }
  }
  const double inv = 1.0 / double(idx.size());
  out.loss *= inv;
  for (auto& v : out.grad) v *= inv;
  return out;
}

BlockPartition MlpModel::partition() const {
  std::vector<std::size_t> sizes;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    sizes.push_back(widths_[l + 1] * widths_[l]);
    sizes.push_back(widths_[l + 1]);
  }
  return BlockPartition(std::move(sizes));
}

std::vector<std::string> MlpModel::block_labels() const {
  std::vector<std::string> labels;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    labels.push_back("W" + std::to_string(l + 1));
    labels.push_back("b" + std::to_string(l + 1));
  }
  return labels;
}

ScaledMlp scaled_mlp(const std::vector<std::size_t>& widths, double c, std::uint64_t seed) {
  if (!(c >= 1.0)) throw std::invalid_argument("scaled_mlp: c must be >= 1");
  ScaledMlp net{MlpModel(widths), {}};
  net.theta.assign(net.model.dim(), 0.0);
  auto rng = make_rng(seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t pos = 0;
  double layer_scale = 1.0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double sd = layer_scale / std::sqrt(double(widths[l]));
    const std::size_t count = widths[l + 1] * widths[l];
    for (std::size_t k = 0; k < count; ++k) net.theta[pos + k] = sd * gauss(rng);
    pos += count + widths[l + 1];  // biases stay zero
    layer_scale *= c;
  }
  return net;
}

// ---- training ---------------------------------------------------------------

std::string_view to_string(TrainOptimizer o) { return o == TrainOptimizer::sgd ? "sgd" : "adam"; }

TrainOptimizer parse_train_optimizer(std::string_view s) {
  if (s == "sgd") return TrainOptimizer::sgd;
  if (s == "adam") return TrainOptimizer::adam;
  throw std::invalid_argument("unknown training optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

double accuracy(const Model& model, std::span<const double> theta, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t hits = 0;
  for (const auto& s : data.samples) hits += (s.y * model.logit(theta, s.x) > 0) ? 1 : 0;
  return double(hits) / double(data.size());
}

double mean_confidence(const Model& model, std::span<const double> theta, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("mean_confidence: empty dataset");
  double sum = 0.0;
  for (const auto& s : data.samples) sum += logistic(s.y * model.logit(theta, s.x));
  return sum / double(data.size());
}

TrainResult train(const Model& model, std::span<const double> theta0, const Dataset& data, const TrainConfig& cfg) {
  if (theta0.size() != model.dim()) throw std::invalid_argument("train: parameter vector has the wrong length");
  data.validate();
  if (!(cfg.lr >= 0) || !std::isfinite(cfg.lr)) throw std::invalid_argument("train: learning rate must be >= 0");
  const std::size_t n = data.size();
  const std::size_t batch = (cfg.batch_size == 0 || cfg.batch_size > n) ? n : cfg.batch_size;

  Dataset snap_batch;
  if (cfg.snapshot_stride > 0) {
    const std::size_t m = (cfg.snapshot_samples == 0) ? n : std::min(cfg.snapshot_samples, n);
    snap_batch.samples.assign(data.samples.begin(), data.samples.begin() + m);
  }

  TrainResult r;
  r.theta.assign(theta0.begin(), theta0.end());
  std::vector<double> m1(model.dim(), 0.0), m2(model.dim(), 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(cfg.seed, 0);
  double b1t = 1.0, b2t = 1.0;

  auto record = [&](std::size_t step) {
    const double loss = model.loss_grad(r.theta, data).loss;
    r.loss.push_back(loss);
    r.accuracy.push_back(accuracy(model, r.theta, data));
    if (cfg.snapshot_stride > 0 && (step % cfg.snapshot_stride == 0 || step == cfg.steps)) {
      auto s = hessian_fd(model, r.theta, snap_batch);
      s.step = step;
      r.snapshots.push_back(std::move(s));
    }
    return std::isfinite(loss);
  };

  try {
    for (std::size_t t = 0; t < cfg.steps; ++t) {
      if (!record(t)) {
        r.diverged = true;
        return r;
      }
      // partial Fisher-Yates draw of the minibatch
      for (std::size_t k = 0; k < batch; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(order[k], order[pick(rng)]);
      }
      auto g = model.loss_grad(r.theta, data, std::span(order).first(batch)).grad;
      if (cfg.optimizer == TrainOptimizer::sgd) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          m1[i] = cfg.momentum * m1[i] + g[i];
          r.theta[i] -= cfg.lr * m1[i];
        }
      } else {
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (std::size_t i = 0; i < g.size(); ++i) {
          m1[i] = cfg.beta1 * m1[i] + (1 - cfg.beta1) * g[i];
          m2[i] = cfg.beta2 * m2[i] + (1 - cfg.beta2) * g[i] * g[i];
          const double mh = m1[i] / (1 - b1t), vh = m2[i] / (1 - b2t);
          r.theta[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        }
      }
      if (!std::all_of(r.theta.begin(), r.theta.end(), [](double v) { return std::isfinite(v); })) {
        r.diverged = true;
        return r;
      }
    }
    if (!record(cfg.steps)) r.diverged = true;
  } catch (const std::runtime_error& e) {
    if (std::string_view(e.what()).starts_with("non-finite activation")) {
      r.diverged = true;
      return r;
    }
    throw;
  }
  return r;
}

std::vector<std::vector<double>> block_spectra(const HessianSnapshot& s) {
  std::vector<std::vector<double>> out;
  for (std::size_t l = 0; l < s.partition.blocks(); ++l)
    out.push_back(exact_eigenvalues(s.hessian.principal_block(s.partition.range(l))));
  return out;
}

HeterogeneityReport snapshot_heterogeneity(const HessianSnapshot& s, const std::vector<std::string>& labels,
                                           const ExactSpectraOptions& opts, std::vector<std::string>* warnings) {
  if (labels.size() != s.partition.blocks()) throw std::invalid_argument("snapshot_heterogeneity: label count mismatch");
  std::vector<std::vector<double>> spectra;
  std::vector<std::string> kept;
  const auto all = block_spectra(s);
  for (std::size_t l = 0; l < all.size(); ++l) {
    if (std::all_of(all[l].begin(), all[l].end(), [](double v) { return v == 0.0; })) {
      if (warnings) warnings->push_back("block " + labels[l] + " has an all-zero Hessian and was skipped");
      continue;
    }
    spectra.push_back(all[l]);
    kept.push_back(labels[l]);
  }
  if (spectra.size() < 2) throw std::domain_error("snapshot_heterogeneity: fewer than two non-zero blocks");
  return heatmap_from_eigenvalues(spectra, opts, std::move(kept));
}

void write_curve_csv(const std::string& path, const TrainResult& r) {
  std::ostringstream os;
  os << "step,loss,accuracy\n";
  for (std::size_t t = 0; t < r.loss.size(); ++t)
    os << t << ',' << format_double(r.loss[t]) << ',' << format_double(r.accuracy[t]) << '\n';
  write_file_atomic(path, os.str());
}

}  // namespace blockspec
