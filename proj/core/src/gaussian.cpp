#include "arcnp/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace arcnp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

bool try_factorize(const Matrix& cov, Matrix& lower) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) return false;
  }
  return true;
}

}  // namespace

double CholeskyFactor::log_determinant() const {
  return 2.0 * lower.diagonal().array().log().sum();
}

Vector CholeskyFactor::solve_lower(const Vector& b) const {
  return lower.triangularView<Eigen::Lower>().solve(b);
}

Vector CholeskyFactor::solve(const Vector& b) const {
  Vector z = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

Matrix CholeskyFactor::solve(const Matrix& b) const {
  Matrix z = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

CholeskyFactor factorize(const Matrix& cov) {
  const auto n = cov.rows();
  if (cov.cols() != n) {
    throw FactorizationError(static_cast<std::size_t>(n),
                             "factorize: matrix is not square");
  }
  CholeskyFactor out;
  if (n == 0) return out;
  if (!cov.allFinite()) {
    throw FactorizationError(static_cast<std::size_t>(n),
                             "factorize: non-finite covariance entries");
  }
  if (try_factorize(cov, out.lower)) return out;

  const double scale = std::max(cov.diagonal().cwiseAbs().mean(), 1e-300);
  for (double rel : {1e-8, 1e-6}) {
    Matrix jittered = cov;
    jittered.diagonal().array() += rel * scale;
    if (try_factorize(jittered, out.lower)) {
      out.jitter = rel * scale;
      return out;
    }
  }
  throw FactorizationError(
      static_cast<std::size_t>(n),
      "factorize: covariance of dimension " + std::to_string(n) +
          " is not positive definite after jitter");
}

double normal_logpdf(double value, double mean, double variance) {
  const double r = value - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

double gaussian_logpdf(const Vector& value, const GaussianJoint& dist) {
  if (value.size() != dist.mean.size() ||
      dist.covariance.rows() != dist.mean.size()) {
    throw std::invalid_argument("gaussian_logpdf: dimension mismatch");
  }
  const auto n = value.size();
  if (n == 0) return 0.0;
  const CholeskyFactor factor = factorize(dist.covariance);
  const Vector z = factor.solve_lower(value - dist.mean);
  return -0.5 * (static_cast<double>(n) * kLog2Pi + factor.log_determinant() +
                 z.squaredNorm());
}

double gaussian_kl(const GaussianJoint& p, const GaussianJoint& q) {
  if (p.dim() != q.dim() || p.covariance.rows() != p.mean.size() ||
      q.covariance.rows() != q.mean.size()) {
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  }
  const auto k = static_cast<double>(p.dim());
  if (p.dim() == 0) return 0.0;
  const CholeskyFactor lp = factorize(p.covariance);
  const CholeskyFactor lq = factorize(q.covariance);
  // tr(Sq^-1 Sp) = ||Lq^-1 Lp||_F^2
  const Matrix a = lq.lower.triangularView<Eigen::Lower>().solve(lp.lower);
  const Vector d = lq.solve_lower(q.mean - p.mean);
  const double kl = 0.5 * (a.squaredNorm() + d.squaredNorm() - k +
                           lq.log_determinant() - lp.log_determinant());
  return std::max(kl, 0.0);
}

Vector sample_gaussian(const Vector& mean, const CholeskyFactor& factor,
                       RngStream& rng) {
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + factor.lower.triangularView<Eigen::Lower>() * z;
}

Vector sample_gaussian(const GaussianJoint& dist, RngStream& rng) {
  return sample_gaussian(dist.mean, factorize(dist.covariance), rng);
}

McEstimate mean_and_se(const std::vector<double>& values) {
  McEstimate out;
  const auto n = values.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.estimate = sum / static_cast<double>(n);
  if (n < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.estimate) * (v - out.estimate);
  out.standard_error =
      std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

McEstimate mc_kl(const LogDensityFn& log_p, const LogDensityFn& log_q,
                 const SamplerFn& sampler, std::size_t n_samples,
                 RngStream& rng) {
  if (n_samples < 2) throw std::invalid_argument("mc_kl: need >= 2 samples");
  std::vector<double> diffs;
  diffs.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Vector draw = sampler(rng);
    const double lp = log_p(draw);
    const double lq = log_q(draw);
    if (!std::isfinite(lp) || !std::isfinite(lq)) {
      throw NonFiniteError(i, "mc_kl: non-finite log density at draw " +
                                  std::to_string(i));
    }
    diffs.push_back(lp - lq);
  }
  return mean_and_se(diffs);
}

}  // namespace arcnp
