#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arcnp/adapter.hpp"
#include "arcnp/gp.hpp"
#include "arcnp/types.hpp"

namespace arcnp::eval {

/// Aggregate of one metric over a task set. `per_task` holds the value of
/// every task that evaluated successfully; failures are only counted.
struct MetricReport {
  std::string experiment;
  std::string model;
  std::string metric;
  std::vector<double> per_task;
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * standard error
  std::size_t n_excluded = 0;
  /// Pooled Monte-Carlo standard error of the mean, for estimated metrics.
  std::optional<double> mc_standard_error;
  /// Per-task Monte-Carlo standard errors, aligned with per_task.
  std::vector<double> per_task_se;

  std::size_t n_tasks() const { return per_task.size(); }

  nlohmann::json to_json() const;
  static std::string csv_header();
  /// One CSV row, floats with 9 significant digits.
  std::string csv_row() const;
};

/// Fills mean and ci95 from per_task.
void summarize(MetricReport& report);

/// Joint log-density of the target outputs of `task`; `index` is the
/// task's position in the evaluated set.
using TaskDensityFn = std::function<double(const Task& task, std::size_t index)>;

/// Per-task log-density divided by the target count, aggregated. A task
/// whose density throws or is non-finite is excluded and counted.
/// Tasks are spread over `threads` workers; the reduction is in task order.
MetricReport eval_loglik(const TaskDensityFn& density,
                         const std::vector<Task>& tasks,
                         std::size_t threads = 1);

/// Factorized (non-AR) density of the adapter's marginals.
TaskDensityFn marginal_density(const ModelAdapter& model);

/// AR chain-rule density with one random ordering per task, seeded from
/// `seed` and the task index.
TaskDensityFn ar_density(const ModelAdapter& model, std::uint64_t seed,
                         std::size_t block_size = 1);

/// Context empirical moments; see trivial_prediction.
TaskDensityFn trivial_baseline();

using JointFn = std::function<GaussianJoint(const Task& task)>;

/// Exact normalized KL(gp posterior || candidate) per task.
MetricReport eval_kl_to_truth(const gp::GpModel& truth, const JointFn& candidate,
                              const std::vector<Task>& tasks,
                              std::size_t threads = 1);

/// Candidate log-density of `values` (target order) for `task`.
using CandidateDensityFn = std::function<double(
    const Task& task, std::size_t index, const Vector& values)>;

/// Monte-Carlo normalized KL(gp posterior || candidate) per task with
/// `n_samples` draws from the exact posterior. Per-task MC errors are
/// pooled into mc_standard_error.
MetricReport eval_kl_to_truth_mc(const gp::GpModel& truth,
                                 const CandidateDensityFn& candidate,
                                 const std::vector<Task>& tasks,
                                 std::size_t n_samples, std::uint64_t seed,
                                 std::size_t threads = 1);

/// Diagonal of a joint (the diagonal-GP baseline as a joint).
GaussianJoint diagonalize(const GaussianJoint& joint);

/// Formats with 9 significant digits.
std::string format_number(double value);

}  // namespace arcnp::eval
