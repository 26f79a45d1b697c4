#include "arcnp/types.hpp"

#include <cmath>

namespace arcnp {

void Task::validate() const {
  for (const auto& p : context) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw std::invalid_argument("Task: non-finite context point");
    }
  }
  for (const auto& t : targets) {
    if (!std::isfinite(t.x)) {
      throw std::invalid_argument("Task: non-finite target input");
    }
  }
  if (target_outputs) {
    if (target_outputs->size() != targets.size()) {
      throw std::invalid_argument("Task: target_outputs length " +
                                  std::to_string(target_outputs->size()) +
                                  " != targets length " +
                                  std::to_string(targets.size()));
    }
    for (double y : *target_outputs) {
      if (!std::isfinite(y)) {
        throw std::invalid_argument("Task: non-finite target output");
      }
    }
  }
}

std::vector<Point> Task::target_points() const {
  if (!target_outputs) {
    throw std::logic_error("Task::target_points: task has no target outputs");
  }
  std::vector<Point> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out.push_back({targets[i].x, (*target_outputs)[i], targets[i].channel});
  }
  return out;
}

void MarginalPrediction::validate() const {
  if (means.size() != variances.size()) {
    throw std::invalid_argument("MarginalPrediction: length mismatch");
  }
  for (Eigen::Index i = 0; i < variances.size(); ++i) {
    if (!(variances[i] > 0.0) || !std::isfinite(variances[i]) ||
        !std::isfinite(means[i])) {
      throw std::invalid_argument(
          "MarginalPrediction: invalid entry at index " + std::to_string(i));
    }
  }
}

void GaussianJoint::validate() const {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw std::invalid_argument("GaussianJoint: dimension mismatch");
  }
  const double scale = covariance.cwiseAbs().maxCoeff();
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + scale)) {
    throw std::invalid_argument("GaussianJoint: covariance not symmetric");
  }
}

std::vector<double> inputs_of(std::span<const Input> targets) {
  std::vector<double> xs;
  xs.reserve(targets.size());
  for (const auto& t : targets) xs.push_back(t.x);
  return xs;
}

}  // namespace arcnp
