#pragma once

// Desk-scale networks for checking Hessian structure: a one-hidden-layer tanh
// network with logistic loss, a four-layer MLP with per-layer init scaling,
// finite-difference Hessians, and a small SGD/Adam trainer.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockspec/heterogeneity.hpp"
#include "blockspec/operator.hpp"

namespace blockspec {

struct Sample {
  std::vector<double> x;
  double y = 1.0;  // +1 or -1
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t features() const { return samples.empty() ? 0 : samples.front().x.size(); }
  /// Finite features, consistent widths, labels in {-1, +1}, both classes present.
  void validate() const;

  /// Two isotropic Gaussian blobs with means +/- (separation/2) * e, where e is a
  /// random unit direction; labels alternate so the classes are balanced.
  static Dataset blobs(std::size_t n, std::size_t features, double separation, double noise, std::uint64_t seed);
};

void write_dataset_csv(const std::string& path, const Dataset& d);
Dataset read_dataset_csv(const std::string& path);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// log(1 + exp(-z)) without overflow.
double softplus_neg(double z);
/// 1 / (1 + exp(-z)).
double logistic(double z);

/// Anything trainable on a flat parameter vector with a scalar logit output.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t dim() const = 0;
  virtual double logit(std::span<const double> theta, std::span<const double> x) const = 0;
  /// Mean logistic loss and its gradient over the selected samples (all when
  /// `indices` is empty).
  virtual LossGrad loss_grad(std::span<const double> theta, const Dataset& data,
                             std::span<const std::size_t> indices = {}) const = 0;
  virtual BlockPartition partition() const = 0;
  virtual std::vector<std::string> block_labels() const = 0;
};

/// f(theta, x) = sum_i v_i tanh(w_i . x). Flattened as all w_i (row-major)
/// followed by all v_i.
struct ToyNet {
  std::size_t hidden = 0;
  std::size_t inputs = 0;
  std::vector<std::vector<double>> w;  // hidden x inputs
  std::vector<double> v;               // hidden

  std::size_t dim() const { return hidden * inputs + hidden; }
  std::vector<double> flatten() const;
  static ToyNet unflatten(std::size_t hidden, std::size_t inputs, std::span<const double> theta);
  /// w ~ N(0, 1/inputs), v ~ N(0, 1/hidden).
  static ToyNet random(std::size_t hidden, std::size_t inputs, std::uint64_t seed);

  double output(std::span<const double> x) const;
};

/// Model view of a ToyNet architecture. Partition: one block per hidden
/// neuron's input weights w_i, then one block for v.
class ToyNetModel final : public Model {
 public:
  ToyNetModel(std::size_t hidden, std::size_t inputs) : hidden_(hidden), inputs_(inputs) {}
  std::size_t dim() const override { return hidden_ * inputs_ + hidden_; }
  double logit(std::span<const double> theta, std::span<const double> x) const override;
  LossGrad loss_grad(std::span<const double> theta, const Dataset& data,
                     std::span<const std::size_t> indices = {}) const override;
  BlockPartition partition() const override;
  std::vector<std::string> block_labels() const override;

 private:
  std::size_t hidden_, inputs_;
};

LossGrad loss_grad(const ToyNet& net, const Dataset& batch);

/// The (i, j) cross block of the per-sample Hessian,
/// p(1-p) v_i v_j tanh'(w_i.x) tanh'(w_j.x) x x^T with p = logistic(y f).
/// Row-major inputs x inputs. Requires i != j.
std::vector<double> eq1_offdiag_block(const ToyNet& net, const Sample& sample, std::size_t i, std::size_t j);

struct HessianSnapshot {
  DenseSymmetric hessian;  // symmetrized (H + H^T)/2
  double asymmetry = 0.0;  // max |H_ij - H_ji| before symmetrization
  BlockPartition partition;
  std::size_t step = 0;
};

constexpr std::size_t kMaxFdDim = 500;

using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

/// Central differences of `grad`, column by column with step
/// h_j = rel_step * (1 + |theta_j|).
HessianSnapshot hessian_fd(const GradientFn& grad, std::span<const double> theta, BlockPartition partition,
                           double rel_step = 1e-4, unsigned jobs = 1);

HessianSnapshot hessian_fd(const Model& model, std::span<const double> theta, const Dataset& batch,
                           double rel_step = 1e-4, unsigned jobs = 1);

/// Squared Frobenius mass outside the partition's diagonal blocks divided by
/// the total squared Frobenius mass.
double offdiag_mass_ratio(const DenseSymmetric& m, const BlockPartition& partition);

/// Four dense layers with tanh between them and a scalar output:
/// widths = {inputs, h1, h2, h3, 1}. Flattened per layer as W (row-major,
/// out x in) then b.
class MlpModel final : public Model {
 public:
  explicit MlpModel(std::vector<std::size_t> widths);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t dim() const override { return dim_; }
  double logit(std::span<const double> theta, std::span<const double> x) const override;
  LossGrad loss_grad(std::span<const double> theta, const Dataset& data,
                     std::span<const std::size_t> indices = {}) const override;
  /// One block per weight matrix and one per bias vector.
  BlockPartition partition() const override;
  std::vector<std::string> block_labels() const override;

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> weight_offset_, bias_offset_;
  std::size_t dim_ = 0;
};

struct ScaledMlp {
  MlpModel model;
  std::vector<double> theta;
};

/// Layer l (1-based) weights ~ N(0, (c^(l-1))^2 / fan_in); biases 0.
ScaledMlp scaled_mlp(const std::vector<std::size_t>& widths, double c, std::uint64_t seed);

enum class TrainOptimizer { sgd, adam };
std::string_view to_string(TrainOptimizer o);
TrainOptimizer parse_train_optimizer(std::string_view s);

struct TrainConfig {
  TrainOptimizer optimizer = TrainOptimizer::adam;
  double lr = 1e-3;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;  // adam
  std::size_t steps = 1000;
  std::size_t batch_size = 32;  // 0 = full batch
  std::uint64_t seed = 0;       // minibatch sampling
  std::size_t snapshot_stride = 0;  // 0 = no Hessian snapshots
  std::size_t snapshot_samples = 0; // samples used for snapshots (0 = all)
};

struct TrainResult {
  std::vector<double> loss;      // full-dataset loss before each step and after the last
  std::vector<double> accuracy;  // same indexing
  std::vector<HessianSnapshot> snapshots;
  std::vector<double> theta;
  bool diverged = false;
};

TrainResult train(const Model& model, std::span<const double> theta0, const Dataset& data, const TrainConfig& cfg);

double accuracy(const Model& model, std::span<const double> theta, const Dataset& data);
/// Mean of p(y|x) = logistic(y f) over the dataset.
double mean_confidence(const Model& model, std::span<const double> theta, const Dataset& data);

/// Exact eigenvalues of every principal block of a snapshot.
std::vector<std::vector<double>> block_spectra(const HessianSnapshot& s);

/// Heterogeneity of a snapshot from exact block spectra. Blocks whose Hessian
/// is identically zero (saturated units leave nothing for finite differences
/// to resolve) have no normalizable spectrum; they are left out and named in
/// `warnings`. Throws when fewer than two blocks remain.
HeterogeneityReport snapshot_heterogeneity(const HessianSnapshot& s, const std::vector<std::string>& labels,
                                           const ExactSpectraOptions& opts, std::vector<std::string>* warnings = nullptr);

void write_curve_csv(const std::string& path, const TrainResult& r);

}  // namespace blockspec
