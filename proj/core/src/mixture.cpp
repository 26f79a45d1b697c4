#include "arcnp/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "arcnp/gaussian.hpp"

namespace arcnp::mixture {
namespace {

double log_sum_exp(const std::array<double, 3>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double a : v) s += std::exp(a - m);
  return m + std::log(s);
}

double log_weight(double w) {
  return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
}

}  // namespace

FunctionMixture FunctionMixture::illustration() { return FunctionMixture{}; }

FunctionMixture FunctionMixture::auxiliary() {
  FunctionMixture m;
  m.noise_variances = {0.25, 0.0625, 0.25};
  return m;
}

double FunctionMixture::component_mean(std::size_t component, double x) const {
  switch (component) {
    case 0:
      return x * x + quadratic_offset;
    case 1:
      return x;
    case 2:
      return -x;
    default:
      throw std::out_of_range("FunctionMixture: component index");
  }
}

void FunctionMixture::validate() const {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("FunctionMixture: weight < 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("FunctionMixture: weights must sum to 1");
  }
  for (double v : noise_variances) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("FunctionMixture: variances must be > 0");
    }
  }
}

FunctionMixture mixture_posterior(const FunctionMixture& mix,
                                  std::span<const Point> context) {
  std::array<double, 3> logw{};
  for (std::size_t i = 0; i < 3; ++i) {
    logw[i] = log_weight(mix.weights[i]);
    if (!std::isfinite(logw[i])) continue;
    for (const auto& p : context) {
      logw[i] += normal_logpdf(p.y, mix.component_mean(i, p.x),
                               mix.noise_variances[i]);
    }
  }
  FunctionMixture out = mix;
  const double norm = log_sum_exp(logw);
  if (!std::isfinite(norm)) {
    // Every likelihood underflowed even in log space (or all prior weights
    // were zero); keep the prior.
    return out;
  }
  for (std::size_t i = 0; i < 3; ++i) out.weights[i] = std::exp(logw[i] - norm);
  return out;
}

MarginalPrediction ideal_cnp_mixture(const FunctionMixture& mix,
                                     std::span<const Point> context,
                                     std::span<const Input> targets) {
  const FunctionMixture post = mixture_posterior(mix, context);
  const auto n = static_cast<Eigen::Index>(targets.size());
  MarginalPrediction out{Vector(n), Vector(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = targets[static_cast<std::size_t>(j)].x;
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double f = post.component_mean(i, x);
      mean += post.weights[i] * f;
      second += post.weights[i] * (post.noise_variances[i] + f * f);
    }
    out.means[j] = mean;
    // Never below the smallest active component variance.
    double floor = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 3; ++i) {
      if (post.weights[i] > 0.0) floor = std::min(floor, post.noise_variances[i]);
    }
    out.variances[j] = std::max(second - mean * mean, floor);
  }
  return out;
}

GaussianJoint ideal_gnp_mixture(const FunctionMixture& mix,
                                std::span<const Point> context,
                                std::span<const Input> targets) {
  const FunctionMixture post = mixture_posterior(mix, context);
  const auto n = static_cast<Eigen::Index>(targets.size());
  Matrix f(3, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < 3; ++i) {
      f(static_cast<Eigen::Index>(i), j) =
          post.component_mean(i, targets[static_cast<std::size_t>(j)].x);
    }
  }
  const Vector w = Eigen::Map<const Vector>(post.weights.data(), 3);
  const Vector s2 = Eigen::Map<const Vector>(post.noise_variances.data(), 3);
  GaussianJoint out;
  out.mean = f.transpose() * w;
  out.covariance = f.transpose() * w.asDiagonal() * f -
                   out.mean * out.mean.transpose();
  out.covariance.diagonal().array() += w.dot(s2);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

double mixture_true_logpdf(const FunctionMixture& mix,
                           std::span<const Point> context,
                           std::span<const Input> targets,
                           std::span<const double> values) {
  if (values.size() != targets.size()) {
    throw std::invalid_argument("mixture_true_logpdf: length mismatch");
  }
  const FunctionMixture post = mixture_posterior(mix, context);
  std::array<double, 3> terms{};
  for (std::size_t i = 0; i < 3; ++i) {
    terms[i] = log_weight(post.weights[i]);
    if (!std::isfinite(terms[i])) continue;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      terms[i] += normal_logpdf(values[j], post.component_mean(i, targets[j].x),
                                post.noise_variances[i]);
    }
  }
  return log_sum_exp(terms);
}

Vector sample_mixture_predictive(const FunctionMixture& mix,
                                 std::span<const Point> context,
                                 std::span<const Input> targets,
                                 RngStream& rng) {
  const FunctionMixture post = mixture_posterior(mix, context);
  const std::size_t c = rng.categorical(
      std::vector<double>(post.weights.begin(), post.weights.end()));
  const double sd = std::sqrt(post.noise_variances[c]);
  Vector out(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t j = 0; j < targets.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] =
        post.component_mean(c, targets[j].x) + sd * rng.normal();
  }
  return out;
}

}  // namespace arcnp::mixture
