#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Cholesky>

#include "arcnp/rng.hpp"
#include "arcnp/types.hpp"

namespace arcnp {

/// Lower Cholesky factor of a covariance plus the diagonal jitter that had
/// to be added to obtain it (0 when the matrix factorized as given).
struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;

  double log_determinant() const;
  /// Solves L z = b.
  Vector solve_lower(const Vector& b) const;
  /// Solves (L L^T) z = b.
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
};

/// Factorizes `cov`. On failure retries with 1e-8 and then 1e-6 times the
/// mean diagonal magnitude added to the diagonal; throws FactorizationError
/// carrying the dimension if all attempts fail.
CholeskyFactor factorize(const Matrix& cov);

double normal_logpdf(double value, double mean, double variance);

double gaussian_logpdf(const Vector& value, const GaussianJoint& dist);

/// KL(p || q) between multivariate normals. Clamped at zero.
double gaussian_kl(const GaussianJoint& p, const GaussianJoint& q);

Vector sample_gaussian(const GaussianJoint& dist, RngStream& rng);
Vector sample_gaussian(const Vector& mean, const CholeskyFactor& factor,
                       RngStream& rng);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

using LogDensityFn = std::function<double(const Vector&)>;
using SamplerFn = std::function<Vector(RngStream&)>;

/// Monte-Carlo estimate of KL(p || q) = E_p[log p - log q] with its
/// standard error. `sampler` must draw from p. A non-finite density value
/// raises NonFiniteError carrying the draw index.
McEstimate mc_kl(const LogDensityFn& log_p, const LogDensityFn& log_q,
                 const SamplerFn& sampler, std::size_t n_samples,
                 RngStream& rng);

/// Mean and standard error of a sample (n - 1 normalization; SE is 0 for
/// fewer than two values).
McEstimate mean_and_se(const std::vector<double>& values);

}  // namespace arcnp
