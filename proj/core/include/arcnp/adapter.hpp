#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "arcnp/cnp.hpp"
#include "arcnp/gp.hpp"
#include "arcnp/mixture.hpp"
#include "arcnp/rng.hpp"
#include "arcnp/types.hpp"

namespace arcnp {

/// Output transform applied to y before it reaches the model. The model
/// predicts Gaussians over z = t(y); draws are pushed back through t^-1.
enum class OutputTransform { Identity, Log1p };

std::string to_string(OutputTransform t);
OutputTransform output_transform_from_string(const std::string& name);

double apply_transform(OutputTransform t, double y);
double invert_transform(OutputTransform t, double z);
/// log |dz/dy| at y.
double log_jacobian(OutputTransform t, double y);

/// Copy of `task` with every output mapped through `t`.
Task transform_task(const Task& task, OutputTransform t);

using PredictFn = std::function<MarginalPrediction(std::span<const Point>,
                                                   std::span<const Input>)>;
using WarningFn = std::function<void(const std::string&)>;

/// Uniform marginal-prediction interface consumed by the AR engine. The
/// callback sees the context in transformed space and returns marginals in
/// transformed space; everything else works in the original output space.
struct ModelAdapter {
  std::string name;
  PredictFn predict;
  OutputTransform transform = OutputTransform::Identity;
  /// Largest context size seen in training; exceeding it during a rollout
  /// emits a warning through `warn` (stderr when unset).
  std::optional<std::size_t> max_context;
  WarningFn warn;

  /// Marginals given a context in original space. Validates the result.
  MarginalPrediction marginals(std::span<const Point> context,
                               std::span<const Input> targets) const;

  /// Draw for target j of `pred`, returned in original space.
  double sample(const MarginalPrediction& pred, std::size_t j,
                RngStream& rng) const;

  /// Log-density of original-space value y under target j of `pred`,
  /// including the Jacobian of the transform.
  double log_density(const MarginalPrediction& pred, std::size_t j,
                     double y) const;

  /// Point summary of target j in original space (the mean for the
  /// identity transform, t^-1(mean) otherwise).
  double point_estimate(const MarginalPrediction& pred, std::size_t j) const;

  void check_context_size(std::size_t size) const;
};

ModelAdapter cnp_adapter(std::shared_ptr<const nn::CnpModel> model,
                         OutputTransform transform = OutputTransform::Identity,
                         std::optional<std::size_t> max_context = {});

ModelAdapter gp_ideal_cnp_adapter(const gp::GpModel& model);

ModelAdapter mixture_ideal_cnp_adapter(const mixture::FunctionMixture& mix);

/// Context empirical mean and population standard deviation (floored at
/// 1e-3); N(0, 1) for an empty context.
MarginalPrediction trivial_prediction(std::span<const Point> context,
                                      std::span<const Input> targets);

ModelAdapter trivial_adapter();

}  // namespace arcnp
