#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arcnp/adapter.hpp"
#include "arcnp/rng.hpp"
#include "arcnp/types.hpp"

namespace arcnp::ar {

enum class OrderingKind { Random, Given, LeftToRight };

std::string to_string(OrderingKind kind);
OrderingKind ordering_kind_from_string(const std::string& name);

/// Order in which target points are visited by a rollout.
struct Ordering {
  OrderingKind kind = OrderingKind::Random;
  std::uint64_t seed = 0;          // Random
  std::vector<std::size_t> given;  // Given

  static Ordering random(std::uint64_t seed);
  static Ordering left_to_right();
  static Ordering fixed(std::vector<std::size_t> permutation);

  /// Permutation of 0..n-1. LeftToRight sorts by (x, channel), stable in
  /// the original index. Throws std::invalid_argument if a Given ordering
  /// is not a permutation of the right size.
  std::vector<std::size_t> permutation(std::span<const Input> targets) const;
};

/// Points in rollout order plus the permutation that produced them:
/// points[i] is target permutation[i] with its sampled output.
struct Trajectory {
  std::vector<Point> points;
  std::vector<std::size_t> permutation;

  std::size_t size() const { return points.size(); }
  /// Sampled outputs in the original target order.
  std::vector<double> values() const;
};

/// Adapter failure during a rollout. `step` is the index of the forward
/// pass (block) that failed.
class RolloutError : public std::runtime_error {
 public:
  RolloutError(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Autoregressive sampling in blocks of `block_size` targets. Each block
/// is predicted given the context plus every previously sampled point and
/// its points are drawn independently. block_size = 1 is fully AR; a block
/// size of at least the target count is one factorized draw.
Trajectory ar_sample(const ModelAdapter& model, std::span<const Point> context,
                     std::span<const Input> targets, const Ordering& ordering,
                     std::size_t block_size, RngStream& rng);

/// Chain-rule log-density of `values` (given in target order) under the
/// same block factorization as ar_sample.
double ar_logpdf(const ModelAdapter& model, std::span<const Point> context,
                 std::span<const Input> targets, std::span<const double> values,
                 const Ordering& ordering, std::size_t block_size = 1);

struct Spread {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and standard deviation (n - 1 normalization, 0 for a single
/// ordering) of the per-target normalized AR log-likelihood of `task`
/// over `n_orderings` random orderings.
Spread ar_loglik_spread(const ModelAdapter& model, const Task& task,
                        std::size_t n_orderings, RngStream& rng);

struct SmoothSample {
  Trajectory noisy;
  std::vector<double> denoised;  // one value per query input
};

/// AR sample on `grid`, then one more forward pass conditioned on the
/// context plus the sampled grid, returning point estimates at `query`.
SmoothSample smooth_sample(const ModelAdapter& model,
                           std::span<const Point> context,
                           std::span<const Input> grid,
                           std::span<const Input> query, RngStream& rng,
                           const Ordering& ordering = Ordering::left_to_right());

using InputSampler = std::function<Input(RngStream&)>;

InputSampler uniform_inputs(double lower, double upper, int channel = 0);

/// Equal-weight Gaussian mixture marginals: component m of target j is
/// N(means[m][j], variances[m][j]) in the adapter's transformed space.
struct MixtureMarginal {
  std::vector<Vector> means;
  std::vector<Vector> variances;
  OutputTransform transform = OutputTransform::Identity;

  std::size_t components() const { return means.size(); }
  std::size_t targets() const {
    return means.empty() ? 0 : static_cast<std::size_t>(means.front().size());
  }
  /// Log-density of original-space y at target j.
  double log_density(std::size_t j, double y) const;
};

/// Rolls out M trajectories of R auxiliary points at inputs drawn from
/// `aux_inputs`, and averages the model's marginals at `targets` given the
/// context plus each trajectory. R = 0 gives the plain marginal as a single
/// component.
MixtureMarginal aux_ar_predict(const ModelAdapter& model,
                               std::span<const Point> context,
                               std::span<const Input> targets,
                               const InputSampler& aux_inputs,
                               std::size_t trajectory_length,
                               std::size_t trajectory_count, RngStream& rng);

}  // namespace arcnp::ar
