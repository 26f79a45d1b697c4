#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "arcnp/rng.hpp"
#include "arcnp/types.hpp"

namespace arcnp::gen {

/// Drift of the predator equation.
///   Classical: dY = (-gamma Y + delta X Y) dt + sigma Y^nu dW2
///   Literal:   dY = (-gamma X + delta X Y) dt + sigma Y^nu dW2
/// The prey equation is dX = (alpha X - beta X Y) dt + sigma X^nu dW1 in
/// both forms.
enum class PredatorDrift { Classical, Literal };

struct LotkaVolterraParams {
  double alpha = 0.5;
  double beta = 0.06;
  double gamma = 1.0;
  double delta = 0.06;
  double sigma = 5.25;
  double nu = 1.0 / 6.0;
  double eta = 3.0;
  double initial_prey = 52.5;
  double initial_predator = 52.5;
  PredatorDrift drift = PredatorDrift::Classical;

  /// Midpoints of the sampling ranges.
  static LotkaVolterraParams midpoint();
  /// X0, Y0 ~ U[5, 100], alpha ~ U[0.2, 0.8], beta, delta ~ U[0.04, 0.08],
  /// gamma ~ U[0.8, 1.2], sigma ~ U[0.5, 10], eta ~ U[1, 5], nu = 1/6.
  static LotkaVolterraParams sample(RngStream& rng);

  void validate() const;
};

/// Integration grid. The path starts at `start` and is integrated with
/// Euler-Maruyama at `step / substeps`; grid points with t < `keep_from`
/// are discarded from the output.
struct LotkaVolterraGrid {
  double step = 0.01;
  int substeps = 1;
  double start = -10.0;
  double end = 100.0;
  double keep_from = 0.0;
};

struct LotkaVolterraTrajectory {
  std::vector<double> time;
  std::vector<double> prey;
  std::vector<double> predator;
};

/// Populations are clamped at this floor after every step.
inline constexpr double kPopulationFloor = 1e-6;

/// Euler-Maruyama path, scaled by eta. Throws NonFiniteError carrying the
/// step index if the state stops being finite.
LotkaVolterraTrajectory simulate_lotka_volterra(const LotkaVolterraParams& params,
                                                const LotkaVolterraGrid& grid,
                                                RngStream& rng);

enum class PredPreySplit { Interpolation, Forecasting, Reconstruction };

std::string to_string(PredPreySplit split);
PredPreySplit predprey_split_from_string(const std::string& name);

struct PredPreySpec {
  PredPreySplit split = PredPreySplit::Interpolation;
  int min_points = 150;  // retained per series
  int max_points = 250;
  double forecast_min_time = 25.0;
  double forecast_max_time = 75.0;
};

/// Channel ids on Points / Inputs.
inline constexpr int kPreyChannel = 0;
inline constexpr int kPredatorChannel = 1;

/// Retains between min_points and max_points grid times per series
/// (independently for prey and predator, t >= 0) and splits them:
///  - interpolation: a random subset of each series becomes targets
///  - forecasting: everything before a random time is context
///  - reconstruction: one series is split as in forecasting, the other is
///    appended to the context in full
Task sample_predprey_task(const LotkaVolterraTrajectory& trajectory,
                          const PredPreySpec& spec, RngStream& rng);

}  // namespace arcnp::gen
