#pragma once

#include <span>
#include <string>

#include "arcnp/types.hpp"

namespace arcnp::gp {

enum class KernelKind { EQ, Matern52, WeaklyPeriodic };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Unit-variance stationary kernel on scalar inputs.
///
/// EQ:             exp(-r^2 / (2 l^2))
/// Matern52:       (1 + sqrt5 s + 5/3 s^2) exp(-sqrt5 s),   s = r / l
/// WeaklyPeriodic: exp(-r^2 / (2 ld^2) - 2 sin^2(pi r / p) / lp^2)
///
/// With `literal_matern_exponent` the Matern52 exponent is exp(-s) instead
/// of exp(-sqrt5 s); that variant is not a valid Matern kernel and is kept
/// only to reproduce the formula as printed in the source material.
struct Kernel {
  KernelKind kind = KernelKind::EQ;
  double length_scale = 0.25;
  double decay_scale = 0.5;     // ld, weakly periodic only
  double periodic_scale = 1.0;  // lp, weakly periodic only
  double period = 0.25;         // weakly periodic only
  bool literal_matern_exponent = false;

  static Kernel eq(double length_scale = 0.25);
  static Kernel matern52(double length_scale = 0.25);
  static Kernel weakly_periodic(double decay_scale = 0.5,
                                double periodic_scale = 1.0,
                                double period = 0.25);

  void validate() const;
};

double kernel_eval(const Kernel& k, double x, double x_prime);

Matrix gram(const Kernel& k, std::span<const double> a,
            std::span<const double> b);

struct GpModel {
  Kernel kernel;
  double noise_variance = 0.05;

  void validate() const;
};

/// Exact posterior over noisy outputs y(targets) given noisy context
/// observations. With `include_noise = false` the posterior is over the
/// latent f(targets) instead. Empty context returns the prior.
GaussianJoint gp_posterior(const GpModel& model, std::span<const Point> context,
                           std::span<const Input> targets,
                           bool include_noise = true);

/// Diagonal of gp_posterior: the infinite-data optimum within the class of
/// factorized Gaussian predictors.
MarginalPrediction ideal_cnp_gp(const GpModel& model,
                                std::span<const Point> context,
                                std::span<const Input> targets);

/// Full gp_posterior; for Gaussian ground truth the moment-matched joint is
/// the truth itself.
GaussianJoint ideal_gnp_gp(const GpModel& model, std::span<const Point> context,
                           std::span<const Input> targets);

/// Marginal variances are floored at this value so a noiseless
/// interpolating posterior still yields a valid MarginalPrediction.
inline constexpr double kMinMarginalVariance = 1e-12;

}  // namespace arcnp::gp
