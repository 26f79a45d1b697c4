#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "arcnp/rng.hpp"
#include "arcnp/types.hpp"

namespace arcnp::nn {

enum class Activation { ReLU };
enum class InitScheme { UniformFanIn };

/// Fully connected network. `widths` lists every layer width including the
/// input and output; hidden layers use `activation`, the output is linear.
struct MlpConfig {
  std::vector<int> widths;
  Activation activation = Activation::ReLU;
  InitScheme init = InitScheme::UniformFanIn;

  void validate() const;
};

/// One dense layer inside a flat parameter vector. The out x in weight
/// matrix is stored column-major, followed elsewhere by the bias.
struct DenseLayout {
  Eigen::Index in = 0;
  Eigen::Index out = 0;
  Eigen::Index weight_offset = 0;
  Eigen::Index bias_offset = 0;
};

/// MLP whose parameters live in an externally owned flat vector.
class Mlp {
 public:
  Mlp() = default;
  /// Lays the network out starting at `offset`; advances `offset`.
  Mlp(const MlpConfig& config, Eigen::Index& offset);

  const MlpConfig& config() const { return config_; }
  const std::vector<DenseLayout>& layers() const { return layers_; }
  Eigen::Index input_dim() const { return layers_.front().in; }
  Eigen::Index output_dim() const { return layers_.back().out; }

  void initialize(Vector& params, RngStream& rng) const;

  /// Per-layer inputs retained for the backward pass. inputs[l] is the
  /// input to layer l (post-activation of layer l - 1).
  struct Cache {
    std::vector<Matrix> inputs;
  };

  /// Columns of `input` are independent examples. Throws NonFiniteError
  /// with the layer index on NaN/inf activations. `layer_base` offsets the
  /// reported index so encoder and decoder layers are distinguishable.
  Matrix forward(const Vector& params, const Matrix& input,
                 Cache* cache = nullptr, std::size_t layer_base = 0) const;

  /// Accumulates parameter gradients into `grad` and returns the gradient
  /// with respect to the input.
  Matrix backward(const Vector& params, const Cache& cache,
                  const Matrix& grad_output, Vector& grad) const;

 private:
  MlpConfig config_;
  std::vector<DenseLayout> layers_;
};

/// Deep-set conditional neural process configuration. Encoder maps a
/// context point (x, y[, channel one-hot]) to an encoding; encodings are
/// mean-pooled; the decoder maps (pooled encoding, x[, channel one-hot]) to
/// a mean and a raw variance.
struct CnpConfig {
  int encoding_dim = 64;
  std::vector<int> encoder_hidden{64, 64, 64};
  std::vector<int> decoder_hidden{64, 64, 64, 64};
  int num_channels = 1;
  double variance_floor = 1e-6;
  Activation activation = Activation::ReLU;
  InitScheme init = InitScheme::UniformFanIn;

  /// Width-8 network used for gradient checks.
  static CnpConfig tiny();

  int feature_dim() const { return num_channels > 1 ? num_channels : 0; }
  MlpConfig encoder_config() const;
  MlpConfig decoder_config() const;
  void validate() const;
};

class CnpModel {
 public:
  CnpModel() = default;
  explicit CnpModel(CnpConfig config);

  static CnpModel initialized(const CnpConfig& config, RngStream& rng);

  const CnpConfig& config() const { return config_; }
  const Mlp& encoder() const { return encoder_; }
  const Mlp& decoder() const { return decoder_; }
  const Vector& parameters() const { return params_; }
  Vector& parameters() { return params_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  /// Mean-pooled encoding of the context; zero vector for an empty context.
  Vector encode(std::span<const Point> context) const;

  /// Marginal predictions at `targets`. Invariant under permutations of
  /// the context; variances exceed the configured floor.
  MarginalPrediction forward(std::span<const Point> context,
                             std::span<const Input> targets) const;

  MarginalPrediction decode(const Vector& encoding,
                            std::span<const Input> targets) const;

  Matrix encoder_input(std::span<const Point> context) const;
  Matrix decoder_input(const Vector& encoding,
                       std::span<const Input> targets) const;

 private:
  CnpConfig config_;
  Mlp encoder_;
  Mlp decoder_;
  Vector params_;
};

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};

/// Negative mean over tasks of the per-target-normalized Gaussian
/// log-likelihood, with its gradient with respect to the parameters.
/// Throws NonFiniteError carrying the task index on a non-finite loss.
LossAndGradient nll_loss(const CnpModel& model, std::span<const Task> batch);

/// Loss only (no gradient), same normalization.
double nll(const CnpModel& model, std::span<const Task> batch);

/// Per-target-normalized log-likelihood of one task under the plain
/// (non-autoregressive) predictive.
double normalized_loglik(const CnpModel& model, const Task& task);

double softplus(double x);
double sigmoid(double x);

}  // namespace arcnp::nn
