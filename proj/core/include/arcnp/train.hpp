#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "arcnp/adam.hpp"
#include "arcnp/cnp.hpp"
#include "arcnp/rng.hpp"

namespace arcnp::nn {

struct TrainConfig {
  double learning_rate = 3e-4;
  int batch_size = 16;
  int tasks_per_epoch = 1024;
  int epochs = 20;
  int validation_tasks = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;       // mean batch loss over the epoch
  double validation_mean = 0.0;  // mean normalized log-lik
  double validation_lcb = 0.0;   // mean - 1.96 * sd / sqrt(n)
};

struct TrainResult {
  CnpModel model;  // snapshot with the best validation_lcb
  std::vector<EpochMetrics> history;
  int best_epoch = -1;
  bool aborted = false;  // a non-finite loss stopped training early
};

using TaskSampler = std::function<Task(RngStream&)>;
using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Maximum-likelihood training with Adam. Training tasks for epoch e are
/// drawn from a stream forked off `config.seed`; the validation set is
/// drawn once from its own fork and reused every epoch. Returns the
/// parameter snapshot with the best lower confidence bound on validation
/// log-likelihood.
TrainResult train(CnpModel model, const TaskSampler& sampler,
                  const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Lower confidence bound mean - 1.96 * sd / sqrt(n) (sd with n - 1).
double lower_confidence_bound(const std::vector<double>& values);

}  // namespace arcnp::nn
