#include "arcnp/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <utility>

#include "arcnp/gaussian.hpp"

namespace arcnp {

std::string to_string(OutputTransform t) {
  return t == OutputTransform::Log1p ? "log1p" : "identity";
}

OutputTransform output_transform_from_string(const std::string& name) {
  if (name == "identity") return OutputTransform::Identity;
  if (name == "log1p") return OutputTransform::Log1p;
  throw std::invalid_argument("unknown output transform: " + name);
}

double apply_transform(OutputTransform t, double y) {
  if (t == OutputTransform::Identity) return y;
  if (!(y > -1.0)) throw std::domain_error("log1p transform needs y > -1");
  return std::log1p(y);
}

double invert_transform(OutputTransform t, double z) {
  return t == OutputTransform::Identity ? z : std::expm1(z);
}

double log_jacobian(OutputTransform t, double y) {
  return t == OutputTransform::Identity ? 0.0 : -std::log1p(y);
}

Task transform_task(const Task& task, OutputTransform t) {
  Task out = task;
  if (t == OutputTransform::Identity) return out;
  for (auto& p : out.context) p.y = apply_transform(t, p.y);
  if (out.target_outputs) {
    for (auto& y : *out.target_outputs) y = apply_transform(t, y);
  }
  return out;
}

MarginalPrediction ModelAdapter::marginals(
    std::span<const Point> context, std::span<const Input> targets) const {
  MarginalPrediction pred;
  if (transform == OutputTransform::Identity) {
    pred = predict(context, targets);
  } else {
    std::vector<Point> z(context.begin(), context.end());
    for (auto& p : z) p.y = apply_transform(transform, p.y);
    pred = predict(z, targets);
  }
  if (pred.size() != targets.size()) {
    throw std::runtime_error(name + ": prediction size mismatch");
  }
  pred.validate();
  return pred;
}

double ModelAdapter::sample(const MarginalPrediction& pred, std::size_t j,
                            RngStream& rng) const {
  const auto i = static_cast<Eigen::Index>(j);
  return invert_transform(
      transform, rng.normal(pred.means[i], std::sqrt(pred.variances[i])));
}

double ModelAdapter::log_density(const MarginalPrediction& pred,
                                 std::size_t j, double y) const {
  const auto i = static_cast<Eigen::Index>(j);
  return normal_logpdf(apply_transform(transform, y), pred.means[i],
                       pred.variances[i]) +
         log_jacobian(transform, y);
}

double ModelAdapter::point_estimate(const MarginalPrediction& pred,
                                    std::size_t j) const {
  return invert_transform(transform, pred.means[static_cast<Eigen::Index>(j)]);
}

void ModelAdapter::check_context_size(std::size_t size) const {
  if (!max_context || size <= *max_context) return;
  const std::string msg = "warning: " + name + " conditioned on " +
                          std::to_string(size) +
                          " points; trained with at most " +
                          std::to_string(*max_context);
  if (warn) {
    warn(msg);
  } else {
    std::cerr << msg << '\n';
  }
}

ModelAdapter cnp_adapter(std::shared_ptr<const nn::CnpModel> model,
                         OutputTransform transform,
                         std::optional<std::size_t> max_context) {
  if (!model) throw std::invalid_argument("cnp_adapter: null model");
  ModelAdapter a;
  a.name = "cnp";
  a.predict = [model = std::move(model)](std::span<const Point> c,
                                         std::span<const Input> t) {
    return model->forward(c, t);
  };
  a.transform = transform;
  a.max_context = max_context;
  return a;
}

ModelAdapter gp_ideal_cnp_adapter(const gp::GpModel& model) {
  model.validate();
  ModelAdapter a;
  a.name = "ideal-cnp-gp";
  a.predict = [model](std::span<const Point> c, std::span<const Input> t) {
    return gp::ideal_cnp_gp(model, c, t);
  };
  return a;
}

ModelAdapter mixture_ideal_cnp_adapter(const mixture::FunctionMixture& mix) {
  mix.validate();
  ModelAdapter a;
  a.name = "ideal-cnp-mixture";
  a.predict = [mix](std::span<const Point> c, std::span<const Input> t) {
    return mixture::ideal_cnp_mixture(mix, c, t);
  };
  return a;
}

MarginalPrediction trivial_prediction(std::span<const Point> context,
                                      std::span<const Input> targets) {
  // Moments are taken per output channel when the context has points on
  // the target's channel, otherwise over the whole context.
  auto moments = [&](int channel, bool by_channel) {
    double sum = 0.0;
    double sq = 0.0;
    std::size_t n = 0;
    for (const auto& p : context) {
      if (by_channel && p.channel != channel) continue;
      sum += p.y;
      ++n;
    }
    if (n == 0) return std::pair<double, double>{0.0, 1.0};
    const double mean = sum / static_cast<double>(n);
    for (const auto& p : context) {
      if (by_channel && p.channel != channel) continue;
      sq += (p.y - mean) * (p.y - mean);
    }
    const double sd = std::max(std::sqrt(sq / static_cast<double>(n)), 1e-3);
    return std::pair<double, double>{mean, sd};
  };
  MarginalPrediction pred{Vector(targets.size()), Vector(targets.size())};
  for (std::size_t j = 0; j < targets.size(); ++j) {
    bool has_channel = false;
    for (const auto& p : context) {
      if (p.channel == targets[j].channel) {
        has_channel = true;
        break;
      }
    }
    const auto [mean, sd] = moments(targets[j].channel, has_channel);
    const auto i = static_cast<Eigen::Index>(j);
    pred.means[i] = mean;
    pred.variances[i] = sd * sd;
  }
  return pred;
}

ModelAdapter trivial_adapter() {
  ModelAdapter a;
  a.name = "trivial";
  a.predict = trivial_prediction;
  return a;
}

}  // namespace arcnp
