#pragma once

#include <array>
#include <span>

#include "arcnp/rng.hpp"
#include "arcnp/types.hpp"

namespace arcnp::mixture {

/// Three-component mixture of deterministic functions with additive
/// Gaussian noise:
///   f1(x) = x^2 + quadratic_offset,  f2(x) = x,  f3(x) = -x.
/// A task draws one component (by `weights`) and observes it with that
/// component's noise variance at every input.
struct FunctionMixture {
  std::array<double, 3> weights{0.25, 0.5, 0.25};
  std::array<double, 3> noise_variances{1.0, 1.0, 1.0};
  double quadratic_offset = 1.0;

  /// Unit-variance configuration used for the ideal-CNP illustration.
  static FunctionMixture illustration();
  /// Per-component variances 0.25 / 0.0625 / 0.25.
  static FunctionMixture auxiliary();

  double component_mean(std::size_t component, double x) const;
  void validate() const;
};

/// Posterior over the component index given the context, by Bayes' rule
/// with the product of per-point Gaussian likelihoods. Computed in log
/// space; never underflows to an all-zero weight vector.
FunctionMixture mixture_posterior(const FunctionMixture& mix,
                                  std::span<const Point> context);

/// Moment-matched factorized Gaussian of the posterior predictive:
///   mean = sum w_i f_i(x),  var = sum w_i (s_i^2 + f_i(x)^2) - mean^2.
MarginalPrediction ideal_cnp_mixture(const FunctionMixture& mix,
                                     std::span<const Point> context,
                                     std::span<const Input> targets);

/// Moment-matched joint Gaussian of the posterior predictive. Output noise
/// is independent given the component, so
///   Cov(y_j, y_k) = sum w_i f_i(x_j) f_i(x_k) + [j == k] sum w_i s_i^2
///                   - mean(x_j) mean(x_k).
GaussianJoint ideal_gnp_mixture(const FunctionMixture& mix,
                                std::span<const Point> context,
                                std::span<const Input> targets);

/// Exact joint log-density of `values` at `targets` under the posterior
/// mixture given `context`.
double mixture_true_logpdf(const FunctionMixture& mix,
                           std::span<const Point> context,
                           std::span<const Input> targets,
                           std::span<const double> values);

/// One joint draw of the outputs at `targets` from the posterior mixture:
/// a component by its posterior weight, then independent noise.
Vector sample_mixture_predictive(const FunctionMixture& mix,
                                 std::span<const Point> context,
                                 std::span<const Input> targets,
                                 RngStream& rng);

}  // namespace arcnp::mixture
