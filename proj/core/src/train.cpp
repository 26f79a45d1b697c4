#include "arcnp/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "arcnp/gaussian.hpp"

namespace arcnp::nn {
namespace {

constexpr std::uint64_t kValidationStream = 0x7a11da7e;

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size <= 0 || tasks_per_epoch <= 0 ||
      epochs <= 0 || validation_tasks <= 0) {
    throw std::invalid_argument("TrainConfig: all settings must be positive");
  }
}

double lower_confidence_bound(const std::vector<double>& values) {
  const McEstimate est = mean_and_se(values);
  return est.estimate - 1.96 * est.standard_error;
}

TrainResult train(CnpModel model, const TaskSampler& sampler,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const RngStream root(config.seed);

  std::vector<Task> validation;
  {
    RngStream vrng = root.fork(kValidationStream);
    validation.reserve(static_cast<std::size_t>(config.validation_tasks));
    for (int i = 0; i < config.validation_tasks; ++i) {
      validation.push_back(sampler(vrng));
    }
  }

  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  AdamState state = AdamState::zeros(model.parameter_count());

  TrainResult result;
  result.model = model;
  double best_lcb = -std::numeric_limits<double>::infinity();

  const int batches_per_epoch =
      (config.tasks_per_epoch + config.batch_size - 1) / config.batch_size;
  std::vector<Task> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    RngStream rng = root.fork(static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    int n_batches = 0;
    try {
      for (int b = 0; b < batches_per_epoch; ++b) {
        batch.clear();
        for (int i = 0; i < config.batch_size; ++i) batch.push_back(sampler(rng));
        const LossAndGradient lg = nll_loss(model, batch);
        if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
          throw NonFiniteError(static_cast<std::size_t>(b),
                               "train: non-finite loss or gradient");
        }
        adam_step(adam, state, model.parameters(), lg.gradient);
        loss_sum += lg.loss;
        ++n_batches;
      }
    } catch (const NonFiniteError&) {
      result.aborted = true;
      break;
    }

    std::vector<double> scores;
    scores.reserve(validation.size());
    bool finite = true;
    for (const auto& task : validation) {
      try {
        scores.push_back(normalized_loglik(model, task));
      } catch (const NonFiniteError&) {
        finite = false;
        break;
      }
      if (!std::isfinite(scores.back())) {
        finite = false;
        break;
      }
    }
    if (!finite) {
      result.aborted = true;
      break;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / std::max(n_batches, 1);
    m.validation_mean = mean_and_se(scores).estimate;
    m.validation_lcb = lower_confidence_bound(scores);
    result.history.push_back(m);
    if (m.validation_lcb > best_lcb) {
      best_lcb = m.validation_lcb;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (on_epoch) on_epoch(m);
  }
  return result;
}

}  // namespace arcnp::nn
