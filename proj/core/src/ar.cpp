#include "arcnp/ar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "arcnp/gaussian.hpp"

namespace arcnp::ar {
namespace {

std::size_t block_count(std::size_t n, std::size_t k) {
  return (n + k - 1) / k;
}

MarginalPrediction predict_step(const ModelAdapter& model,
                                std::span<const Point> conditioning,
                                std::span<const Input> block,
                                std::size_t step) {
  try {
    return model.marginals(conditioning, block);
  } catch (const std::exception& e) {
    throw RolloutError(step, "rollout step " + std::to_string(step) + ": " +
                                 e.what());
  }
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

void warn_if_oversized(const ModelAdapter& model, std::size_t context_size,
                       std::size_t n, std::size_t k) {
  if (n == 0) return;
  const std::size_t last_block = n - (block_count(n, k) - 1) * k;
  model.check_context_size(context_size + n - last_block);
}

}  // namespace

std::string to_string(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::Random:
      return "random";
    case OrderingKind::Given:
      return "given";
    case OrderingKind::LeftToRight:
      return "left-to-right";
  }
  return "random";
}

OrderingKind ordering_kind_from_string(const std::string& name) {
  if (name == "random") return OrderingKind::Random;
  if (name == "given") return OrderingKind::Given;
  if (name == "left-to-right") return OrderingKind::LeftToRight;
  throw std::invalid_argument("unknown ordering: " + name);
}

Ordering Ordering::random(std::uint64_t seed) {
  return {OrderingKind::Random, seed, {}};
}

Ordering Ordering::left_to_right() {
  return {OrderingKind::LeftToRight, 0, {}};
}

Ordering Ordering::fixed(std::vector<std::size_t> permutation) {
  return {OrderingKind::Given, 0, std::move(permutation)};
}

std::vector<std::size_t> Ordering::permutation(
    std::span<const Input> targets) const {
  const std::size_t n = targets.size();
  switch (kind) {
    case OrderingKind::Random: {
      RngStream rng(seed);
      return rng.permutation(n);
    }
    case OrderingKind::LeftToRight: {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (targets[a].x != targets[b].x) return targets[a].x < targets[b].x;
        return targets[a].channel < targets[b].channel;
      });
      return idx;
    }
    case OrderingKind::Given: {
      if (given.size() != n) {
        throw std::invalid_argument("ordering: permutation size mismatch");
      }
      std::vector<bool> seen(n, false);
      for (std::size_t i : given) {
        if (i >= n || seen[i]) {
          throw std::invalid_argument("ordering: not a permutation");
        }
        seen[i] = true;
      }
      return given;
    }
  }
  return {};
}

std::vector<double> Trajectory::values() const {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[permutation[i]] = points[i].y;
  }
  return out;
}

Trajectory ar_sample(const ModelAdapter& model, std::span<const Point> context,
                     std::span<const Input> targets, const Ordering& ordering,
                     std::size_t block_size, RngStream& rng) {
  if (block_size == 0) throw std::invalid_argument("ar_sample: block size 0");
  Trajectory traj;
  traj.permutation = ordering.permutation(targets);
  const std::size_t n = targets.size();
  if (n == 0) return traj;
  warn_if_oversized(model, context.size(), n, block_size);

  std::vector<Point> conditioning(context.begin(), context.end());
  conditioning.reserve(context.size() + n);
  traj.points.reserve(n);
  std::vector<Input> block;
  for (std::size_t b = 0, start = 0; start < n; ++b, start += block_size) {
    const std::size_t stop = std::min(n, start + block_size);
    block.clear();
    for (std::size_t i = start; i < stop; ++i) {
      block.push_back(targets[traj.permutation[i]]);
    }
    const MarginalPrediction pred = predict_step(model, conditioning, block, b);
    for (std::size_t j = 0; j < block.size(); ++j) {
      const double y = model.sample(pred, j, rng);
      traj.points.push_back({block[j].x, y, block[j].channel});
    }
    conditioning.insert(conditioning.end(), traj.points.begin() + start,
                        traj.points.end());
  }
  return traj;
}

double ar_logpdf(const ModelAdapter& model, std::span<const Point> context,
                 std::span<const Input> targets, std::span<const double> values,
                 const Ordering& ordering, std::size_t block_size) {
  if (block_size == 0) throw std::invalid_argument("ar_logpdf: block size 0");
  if (values.size() != targets.size()) {
    throw std::invalid_argument("ar_logpdf: values and targets differ in size");
  }
  const std::size_t n = targets.size();
  if (n == 0) return 0.0;
  const auto perm = ordering.permutation(targets);
  warn_if_oversized(model, context.size(), n, block_size);

  std::vector<Point> conditioning(context.begin(), context.end());
  conditioning.reserve(context.size() + n);
  std::vector<Input> block;
  double total = 0.0;
  for (std::size_t b = 0, start = 0; start < n; ++b, start += block_size) {
    const std::size_t stop = std::min(n, start + block_size);
    block.clear();
    for (std::size_t i = start; i < stop; ++i) block.push_back(targets[perm[i]]);
    const MarginalPrediction pred = predict_step(model, conditioning, block, b);
    for (std::size_t j = 0; j < block.size(); ++j) {
      const std::size_t t = perm[start + j];
      total += model.log_density(pred, j, values[t]);
    }
    for (std::size_t i = start; i < stop; ++i) {
      conditioning.push_back(
          {targets[perm[i]].x, values[perm[i]], targets[perm[i]].channel});
    }
  }
  return total;
}

Spread ar_loglik_spread(const ModelAdapter& model, const Task& task,
                        std::size_t n_orderings, RngStream& rng) {
  if (n_orderings == 0) {
    throw std::invalid_argument("ar_loglik_spread: need at least one ordering");
  }
  if (!task.target_outputs) {
    throw std::invalid_argument("ar_loglik_spread: task has no target outputs");
  }
  const double n = static_cast<double>(std::max<std::size_t>(task.targets.size(), 1));
  std::vector<double> values;
  values.reserve(n_orderings);
  for (std::size_t i = 0; i < n_orderings; ++i) {
    const Ordering ord = Ordering::random(rng.next_u64());
    values.push_back(ar_logpdf(model, task.context, task.targets,
                               *task.target_outputs, ord) /
                     n);
  }
  const McEstimate est = mean_and_se(values);
  Spread s;
  s.mean = est.estimate;
  s.stddev = est.standard_error * std::sqrt(static_cast<double>(values.size()));
  return s;
}

SmoothSample smooth_sample(const ModelAdapter& model,
                           std::span<const Point> context,
                           std::span<const Input> grid,
                           std::span<const Input> query, RngStream& rng,
                           const Ordering& ordering) {
  SmoothSample out;
  out.noisy = ar_sample(model, context, grid, ordering, 1, rng);
  std::vector<Point> conditioning(context.begin(), context.end());
  conditioning.insert(conditioning.end(), out.noisy.points.begin(),
                      out.noisy.points.end());
  if (query.empty()) return out;
  const MarginalPrediction pred =
      predict_step(model, conditioning, query, block_count(grid.size(), 1));
  out.denoised.resize(query.size());
  for (std::size_t j = 0; j < query.size(); ++j) {
    out.denoised[j] = model.point_estimate(pred, j);
  }
  return out;
}

InputSampler uniform_inputs(double lower, double upper, int channel) {
  if (!(upper > lower)) throw std::invalid_argument("uniform_inputs: empty range");
  return [=](RngStream& rng) { return Input{rng.uniform(lower, upper), channel}; };
}

double MixtureMarginal::log_density(std::size_t j, double y) const {
  if (means.empty()) throw std::logic_error("MixtureMarginal: no components");
  const auto i = static_cast<Eigen::Index>(j);
  const double z = apply_transform(transform, y);
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(means.size());
  for (std::size_t m = 0; m < means.size(); ++m) {
    terms[m] = normal_logpdf(z, means[m][i], variances[m][i]);
    peak = std::max(peak, terms[m]);
  }
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum / static_cast<double>(means.size())) +
         log_jacobian(transform, y);
}

MixtureMarginal aux_ar_predict(const ModelAdapter& model,
                               std::span<const Point> context,
                               std::span<const Input> targets,
                               const InputSampler& aux_inputs,
                               std::size_t trajectory_length,
                               std::size_t trajectory_count, RngStream& rng) {
  if (trajectory_count == 0) {
    throw std::invalid_argument("aux_ar_predict: need at least one trajectory");
  }
  MixtureMarginal out;
  out.transform = model.transform;
  const std::size_t m_count = trajectory_length == 0 ? 1 : trajectory_count;
  std::vector<Input> aux(trajectory_length);
  std::vector<Point> conditioning;
  for (std::size_t m = 0; m < m_count; ++m) {
    for (auto& a : aux) a = aux_inputs(rng);
    const Trajectory traj = ar_sample(model, context, aux,
                                      Ordering::fixed(identity_order(aux.size())),
                                      1, rng);
    conditioning.assign(context.begin(), context.end());
    conditioning.insert(conditioning.end(), traj.points.begin(),
                        traj.points.end());
    const MarginalPrediction pred =
        predict_step(model, conditioning, targets, trajectory_length);
    out.means.push_back(pred.means);
    out.variances.push_back(pred.variances);
  }
  return out;
}

}  // namespace arcnp::ar
