#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace arcnp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// An observed input/output pair. `channel` tags the output series for
/// multi-series data (predator/prey); single-series tasks leave it at 0.
struct Point {
  double x = 0.0;
  double y = 0.0;
  int channel = 0;
};

/// A query location.
struct Input {
  double x = 0.0;
  int channel = 0;
};

/// One meta-learning task: a context set plus target inputs and, for
/// training and evaluation, the target outputs.
struct Task {
  std::vector<Point> context;
  std::vector<Input> targets;
  std::optional<std::vector<double>> target_outputs;

  /// Throws std::invalid_argument if any invariant is broken.
  void validate() const;

  /// Target set as points. Requires target_outputs.
  std::vector<Point> target_points() const;
};

/// Independent Gaussian marginals, one per target input.
struct MarginalPrediction {
  Vector means;
  Vector variances;

  std::size_t size() const { return static_cast<std::size_t>(means.size()); }
  void validate() const;
};

/// Multivariate normal given by mean and full covariance.
struct GaussianJoint {
  Vector mean;
  Matrix covariance;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  void validate() const;
};

/// Raised when a covariance cannot be Cholesky factorized even after
/// jitter escalation.
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(std::size_t dimension, const std::string& what)
      : std::runtime_error(what), dimension_(dimension) {}
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t dimension_;
};

/// Raised when a computation produced NaN or infinity. `index` identifies
/// the offending item (draw, layer, task, step) as documented at the
/// throwing call site.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

std::vector<double> inputs_of(std::span<const Input> targets);

}  // namespace arcnp
