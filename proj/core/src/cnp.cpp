#include "arcnp/cnp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace arcnp::nn {
namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

void check_finite(const Matrix& m, std::size_t layer) {
  if (!m.allFinite()) {
    throw NonFiniteError(layer, "non-finite activation at layer " +
                                    std::to_string(layer));
  }
}

}  // namespace

double softplus(double x) {
  // log(1 + e^x) without overflow.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void MlpConfig::validate() const {
  if (widths.size() < 3) {
    throw std::invalid_argument("MlpConfig: need at least one hidden layer");
  }
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("MlpConfig: widths must be > 0");
  }
}

Mlp::Mlp(const MlpConfig& config, Eigen::Index& offset) : config_(config) {
  config_.validate();
  for (std::size_t l = 0; l + 1 < config_.widths.size(); ++l) {
    DenseLayout layer;
    layer.in = config_.widths[l];
    layer.out = config_.widths[l + 1];
    layer.weight_offset = offset;
    offset += layer.in * layer.out;
    layer.bias_offset = offset;
    offset += layer.out;
    layers_.push_back(layer);
  }
}

void Mlp::initialize(Vector& params, RngStream& rng) const {
  for (const auto& layer : layers_) {
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.in));
    for (Eigen::Index i = 0; i < layer.in * layer.out; ++i) {
      params[layer.weight_offset + i] = rng.uniform(-bound, bound);
    }
    for (Eigen::Index i = 0; i < layer.out; ++i) {
      params[layer.bias_offset + i] = rng.uniform(-bound, bound);
    }
  }
}

Matrix Mlp::forward(const Vector& params, const Matrix& input, Cache* cache,
                    std::size_t layer_base) const {
  if (input.rows() != input_dim()) {
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  }
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->inputs.reserve(layers_.size());
  }
  Matrix h = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const ConstMatrixMap w(params.data() + layer.weight_offset, layer.out,
                           layer.in);
    const Eigen::Map<const Vector> b(params.data() + layer.bias_offset,
                                     layer.out);
    Matrix next = w * h;
    next.colwise() += b;
    if (l + 1 < layers_.size()) next = next.cwiseMax(0.0);
    check_finite(next, layer_base + l);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(h));
    }
    h = std::move(next);
  }
  return h;
}

Matrix Mlp::backward(const Vector& params, const Cache& cache,
                     const Matrix& grad_output, Vector& grad) const {
  Matrix delta = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const Matrix& in = cache.inputs[l];
    MatrixMap gw(grad.data() + layer.weight_offset, layer.out, layer.in);
    Eigen::Map<Vector> gb(grad.data() + layer.bias_offset, layer.out);
    gw.noalias() += delta * in.transpose();
    gb += delta.rowwise().sum();
    const ConstMatrixMap w(params.data() + layer.weight_offset, layer.out,
                           layer.in);
    Matrix next = w.transpose() * delta;
    if (l > 0) {
      // ReLU derivative: the cached input is relu(pre), positive iff active.
      next = (in.array() > 0.0).select(next, 0.0);
    }
    delta = std::move(next);
  }
  return delta;
}

CnpConfig CnpConfig::tiny() {
  CnpConfig c;
  c.encoding_dim = 8;
  c.encoder_hidden = {8, 8, 8};
  c.decoder_hidden = {8, 8, 8, 8};
  return c;
}

MlpConfig CnpConfig::encoder_config() const {
  MlpConfig m;
  m.activation = activation;
  m.init = init;
  m.widths.push_back(2 + feature_dim());
  m.widths.insert(m.widths.end(), encoder_hidden.begin(), encoder_hidden.end());
  m.widths.push_back(encoding_dim);
  return m;
}

MlpConfig CnpConfig::decoder_config() const {
  MlpConfig m;
  m.activation = activation;
  m.init = init;
  m.widths.push_back(encoding_dim + 1 + feature_dim());
  m.widths.insert(m.widths.end(), decoder_hidden.begin(), decoder_hidden.end());
  m.widths.push_back(2);
  return m;
}

void CnpConfig::validate() const {
  if (encoding_dim <= 0 || num_channels < 1 || !(variance_floor > 0.0)) {
    throw std::invalid_argument("CnpConfig: invalid sizes or floor");
  }
  if (encoder_hidden.empty() || decoder_hidden.empty()) {
    throw std::invalid_argument("CnpConfig: need at least one hidden layer");
  }
  encoder_config().validate();
  decoder_config().validate();
}

CnpModel::CnpModel(CnpConfig config) : config_(std::move(config)) {
  config_.validate();
  Eigen::Index offset = 0;
  encoder_ = Mlp(config_.encoder_config(), offset);
  decoder_ = Mlp(config_.decoder_config(), offset);
  params_ = Vector::Zero(offset);
}

CnpModel CnpModel::initialized(const CnpConfig& config, RngStream& rng) {
  CnpModel model(config);
  model.encoder_.initialize(model.params_, rng);
  model.decoder_.initialize(model.params_, rng);
  return model;
}

Matrix CnpModel::encoder_input(std::span<const Point> context) const {
  const int fd = config_.feature_dim();
  Matrix in = Matrix::Zero(2 + fd, static_cast<Eigen::Index>(context.size()));
  for (std::size_t i = 0; i < context.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    in(0, c) = context[i].x;
    in(1, c) = context[i].y;
    if (fd > 0) in(2 + context[i].channel, c) = 1.0;
  }
  return in;
}

Matrix CnpModel::decoder_input(const Vector& encoding,
                               std::span<const Input> targets) const {
  const int fd = config_.feature_dim();
  const Eigen::Index k = config_.encoding_dim;
  Matrix in = Matrix::Zero(k + 1 + fd, static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    in.col(c).head(k) = encoding;
    in(k, c) = targets[i].x;
    if (fd > 0) in(k + 1 + targets[i].channel, c) = 1.0;
  }
  return in;
}

Vector CnpModel::encode(std::span<const Point> context) const {
  if (context.empty()) return Vector::Zero(config_.encoding_dim);
  const Matrix e = encoder_.forward(params_, encoder_input(context));
  // Fixed left-to-right summation.
  Vector sum = Vector::Zero(config_.encoding_dim);
  for (Eigen::Index c = 0; c < e.cols(); ++c) sum += e.col(c);
  return sum / static_cast<double>(e.cols());
}

MarginalPrediction CnpModel::decode(const Vector& encoding,
                                    std::span<const Input> targets) const {
  const Matrix out = decoder_.forward(params_, decoder_input(encoding, targets),
                                      nullptr, encoder_.layers().size());
  MarginalPrediction pred;
  pred.means = out.row(0).transpose();
  pred.variances.resize(out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    pred.variances[j] = config_.variance_floor + softplus(out(1, j));
  }
  return pred;
}

MarginalPrediction CnpModel::forward(std::span<const Point> context,
                                     std::span<const Input> targets) const {
  return decode(encode(context), targets);
}

double normalized_loglik(const CnpModel& model, const Task& task) {
  if (!task.target_outputs) {
    throw std::invalid_argument("normalized_loglik: task has no outputs");
  }
  if (task.targets.empty()) return 0.0;
  const MarginalPrediction pred = model.forward(task.context, task.targets);
  double total = 0.0;
  for (std::size_t j = 0; j < task.targets.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    const double r = (*task.target_outputs)[j] - pred.means[i];
    total += -kHalfLog2Pi - 0.5 * std::log(pred.variances[i]) -
             0.5 * r * r / pred.variances[i];
  }
  return total / static_cast<double>(task.targets.size());
}

double nll(const CnpModel& model, std::span<const Task> batch) {
  if (batch.empty()) throw std::invalid_argument("nll: empty batch");
  double total = 0.0;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const double ll = normalized_loglik(model, batch[t]);
    if (!std::isfinite(ll)) {
      throw NonFiniteError(t, "nll: non-finite loss for task " +
                                  std::to_string(t));
    }
    total -= ll;
  }
  return total / static_cast<double>(batch.size());
}

LossAndGradient nll_loss(const CnpModel& model, std::span<const Task> batch) {
  if (batch.empty()) throw std::invalid_argument("nll_loss: empty batch");
  const Vector& params = model.parameters();
  const auto& config = model.config();
  const Eigen::Index k = config.encoding_dim;
  const double batch_scale = 1.0 / static_cast<double>(batch.size());

  LossAndGradient out;
  out.gradient = Vector::Zero(params.size());

  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Task& task = batch[t];
    if (!task.target_outputs) {
      throw std::invalid_argument("nll_loss: task has no target outputs");
    }
    const std::size_t nt = task.targets.size();
    if (nt == 0) continue;
    const std::size_t nc = task.context.size();

    Mlp::Cache enc_cache;
    Vector encoding = Vector::Zero(k);
    Matrix enc_out;
    if (nc > 0) {
      enc_out = model.encoder().forward(params, model.encoder_input(task.context),
                                        &enc_cache);
      for (Eigen::Index c = 0; c < enc_out.cols(); ++c) encoding += enc_out.col(c);
      encoding /= static_cast<double>(nc);
    }

    Mlp::Cache dec_cache;
    const Matrix dec_out = model.decoder().forward(
        params, model.decoder_input(encoding, task.targets), &dec_cache,
        model.encoder().layers().size());

    const double scale = batch_scale / static_cast<double>(nt);
    Matrix grad_dec_out(2, static_cast<Eigen::Index>(nt));
    double task_ll = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      const double mean = dec_out(0, c);
      const double raw = dec_out(1, c);
      const double var = config.variance_floor + softplus(raw);
      const double r = (*task.target_outputs)[j] - mean;
      task_ll += -kHalfLog2Pi - 0.5 * std::log(var) - 0.5 * r * r / var;
      // d(-ll)/dmean and d(-ll)/dvar, chained through softplus.
      const double d_mean = -r / var;
      const double d_var = 0.5 / var - 0.5 * r * r / (var * var);
      grad_dec_out(0, c) = scale * d_mean;
      grad_dec_out(1, c) = scale * d_var * sigmoid(raw);
    }
    task_ll /= static_cast<double>(nt);
    if (!std::isfinite(task_ll)) {
      throw NonFiniteError(t, "nll_loss: non-finite loss for task " +
                                  std::to_string(t));
    }
    out.loss -= task_ll * batch_scale;

    const Matrix grad_dec_in =
        model.decoder().backward(params, dec_cache, grad_dec_out, out.gradient);
    if (nc > 0) {
      const Vector grad_encoding = grad_dec_in.topRows(k).rowwise().sum();
      Matrix grad_enc_out =
          (grad_encoding / static_cast<double>(nc)).replicate(1, static_cast<Eigen::Index>(nc));
      model.encoder().backward(params, enc_cache, grad_enc_out, out.gradient);
    }
  }
  return out;
}

}  // namespace arcnp::nn
