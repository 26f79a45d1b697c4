#include "arcnp/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace arcnp::nn {

AdamState AdamState::zeros(Eigen::Index n) {
  return {Vector::Zero(n), Vector::Zero(n), 0};
}

void adam_step(const AdamConfig& config, AdamState& state, Vector& params,
               const Vector& grads) {
  if (grads.size() != params.size() ||
      state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++state.step;
  state.first_moment =
      config.beta1 * state.first_moment + (1.0 - config.beta1) * grads;
  state.second_moment = config.beta2 * state.second_moment +
                        (1.0 - config.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  params.array() -= config.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + config.epsilon);
}

}  // namespace arcnp::nn
