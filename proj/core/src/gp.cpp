#include "arcnp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "arcnp/gaussian.hpp"

namespace arcnp::gp {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::EQ:
      return "eq";
    case KernelKind::Matern52:
      return "matern52";
    case KernelKind::WeaklyPeriodic:
      return "weakly-periodic";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "eq") return KernelKind::EQ;
  if (name == "matern52") return KernelKind::Matern52;
  if (name == "weakly-periodic") return KernelKind::WeaklyPeriodic;
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

Kernel Kernel::eq(double length_scale) {
  Kernel k;
  k.kind = KernelKind::EQ;
  k.length_scale = length_scale;
  return k;
}

Kernel Kernel::matern52(double length_scale) {
  Kernel k;
  k.kind = KernelKind::Matern52;
  k.length_scale = length_scale;
  return k;
}

Kernel Kernel::weakly_periodic(double decay_scale, double periodic_scale,
                               double period) {
  Kernel k;
  k.kind = KernelKind::WeaklyPeriodic;
  k.decay_scale = decay_scale;
  k.periodic_scale = periodic_scale;
  k.period = period;
  return k;
}

void Kernel::validate() const {
  const bool ok = kind == KernelKind::WeaklyPeriodic
                      ? (decay_scale > 0 && periodic_scale > 0 && period > 0)
                      : length_scale > 0;
  if (!ok) throw std::invalid_argument("Kernel: scales must be positive");
}

double kernel_eval(const Kernel& k, double x, double x_prime) {
  const double r = std::abs(x - x_prime);
  switch (k.kind) {
    case KernelKind::EQ:
      return std::exp(-0.5 * r * r / (k.length_scale * k.length_scale));
    case KernelKind::Matern52: {
      const double s = r / k.length_scale;
      const double root5s = std::sqrt(5.0) * s;
      const double decay = k.literal_matern_exponent ? s : root5s;
      return (1.0 + root5s + 5.0 / 3.0 * s * s) * std::exp(-decay);
    }
    case KernelKind::WeaklyPeriodic: {
      const double sn = std::sin(std::numbers::pi * r / k.period);
      return std::exp(-0.5 * r * r / (k.decay_scale * k.decay_scale) -
                      2.0 * sn * sn / (k.periodic_scale * k.periodic_scale));
    }
  }
  return 0.0;
}

Matrix gram(const Kernel& k, std::span<const double> a,
            std::span<const double> b) {
  Matrix out(static_cast<Eigen::Index>(a.size()),
             static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          kernel_eval(k, a[i], b[j]);
    }
  }
  return out;
}

void GpModel::validate() const {
  kernel.validate();
  if (!(noise_variance >= 0.0)) {
    throw std::invalid_argument("GpModel: noise_variance must be >= 0");
  }
}

GaussianJoint gp_posterior(const GpModel& model, std::span<const Point> context,
                           std::span<const Input> targets, bool include_noise) {
  const std::vector<double> xt = inputs_of(targets);
  const auto nt = static_cast<Eigen::Index>(xt.size());

  GaussianJoint out;
  Matrix ktt = gram(model.kernel, xt, xt);
  if (context.empty()) {
    out.mean = Vector::Zero(nt);
    out.covariance = std::move(ktt);
  } else {
    std::vector<double> xc;
    Vector yc(static_cast<Eigen::Index>(context.size()));
    xc.reserve(context.size());
    for (std::size_t i = 0; i < context.size(); ++i) {
      xc.push_back(context[i].x);
      yc[static_cast<Eigen::Index>(i)] = context[i].y;
    }
    Matrix kcc = gram(model.kernel, xc, xc);
    kcc.diagonal().array() += model.noise_variance;
    const Matrix kct = gram(model.kernel, xc, xt);
    const CholeskyFactor factor = factorize(kcc);
    const Matrix v = factor.lower.triangularView<Eigen::Lower>().solve(kct);
    out.mean = kct.transpose() * factor.solve(yc);
    out.covariance = ktt - v.transpose() * v;
    // Symmetrize round-off.
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  }
  if (include_noise) out.covariance.diagonal().array() += model.noise_variance;
  return out;
}

MarginalPrediction ideal_cnp_gp(const GpModel& model,
                                std::span<const Point> context,
                                std::span<const Input> targets) {
  const GaussianJoint joint = gp_posterior(model, context, targets);
  MarginalPrediction out;
  out.means = joint.mean;
  out.variances =
      joint.covariance.diagonal().cwiseMax(kMinMarginalVariance);
  return out;
}

GaussianJoint ideal_gnp_gp(const GpModel& model, std::span<const Point> context,
                           std::span<const Input> targets) {
  return gp_posterior(model, context, targets);
}

}  // namespace arcnp::gp
