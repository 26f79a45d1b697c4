#pragma once

#include <cstdint>

#include "arcnp/types.hpp"

namespace arcnp::nn {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::int64_t step = 0;

  static AdamState zeros(Eigen::Index n);
};

/// One bias-corrected Adam update of `params` in place (descent on the
/// loss whose gradient is `grads`).
void adam_step(const AdamConfig& config, AdamState& state, Vector& params,
               const Vector& grads);

}  // namespace arcnp::nn
