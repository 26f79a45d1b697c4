#include "arcnp/lotka_volterra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arcnp::gen {

LotkaVolterraParams LotkaVolterraParams::midpoint() { return {}; }

LotkaVolterraParams LotkaVolterraParams::sample(RngStream& rng) {
  LotkaVolterraParams p;
  p.initial_prey = rng.uniform(5.0, 100.0);
  p.initial_predator = rng.uniform(5.0, 100.0);
  p.alpha = rng.uniform(0.2, 0.8);
  p.beta = rng.uniform(0.04, 0.08);
  p.gamma = rng.uniform(0.8, 1.2);
  p.delta = rng.uniform(0.04, 0.08);
  p.nu = 1.0 / 6.0;
  p.sigma = rng.uniform(0.5, 10.0);
  p.eta = rng.uniform(1.0, 5.0);
  return p;
}

void LotkaVolterraParams::validate() const {
  for (double v : {alpha, gamma, nu, eta, initial_prey, initial_predator}) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("LotkaVolterraParams: must be positive");
    }
  }
  for (double v : {beta, delta, sigma}) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument("LotkaVolterraParams: beta, delta, sigma must be >= 0");
    }
  }
}

LotkaVolterraTrajectory simulate_lotka_volterra(const LotkaVolterraParams& p,
                                                const LotkaVolterraGrid& grid,
                                                RngStream& rng) {
  p.validate();
  if (!(grid.step > 0.0) || grid.substeps < 1 || !(grid.end > grid.start)) {
    throw std::invalid_argument("LotkaVolterraGrid: invalid grid");
  }
  const auto n_steps =
      static_cast<std::size_t>(std::llround((grid.end - grid.start) / grid.step));
  const double h = grid.step / grid.substeps;
  const double sqrt_h = std::sqrt(h);

  LotkaVolterraTrajectory out;
  double x = p.initial_prey;
  double y = p.initial_predator;
  auto emit = [&](std::size_t i) {
    const double t = grid.start + static_cast<double>(i) * grid.step;
    if (t < grid.keep_from - 1e-9) return;
    out.time.push_back(t);
    out.prey.push_back(p.eta * x);
    out.predator.push_back(p.eta * y);
  };

  emit(0);
  for (std::size_t i = 1; i <= n_steps; ++i) {
    for (int s = 0; s < grid.substeps; ++s) {
      const double prey_drift = p.alpha * x - p.beta * x * y;
      const double predator_drift =
          (p.drift == PredatorDrift::Classical ? -p.gamma * y : -p.gamma * x) +
          p.delta * x * y;
      double dw1 = 0.0;
      double dw2 = 0.0;
      if (p.sigma > 0.0) {
        dw1 = sqrt_h * rng.normal();
        dw2 = sqrt_h * rng.normal();
      }
      const double nx = x + prey_drift * h + p.sigma * std::pow(x, p.nu) * dw1;
      const double ny =
          y + predator_drift * h + p.sigma * std::pow(y, p.nu) * dw2;
      if (!std::isfinite(nx) || !std::isfinite(ny)) {
        throw NonFiniteError(
            i, "simulate_lotka_volterra: non-finite state at step " +
                   std::to_string(i) + " (alpha=" + std::to_string(p.alpha) +
                   ", beta=" + std::to_string(p.beta) +
                   ", gamma=" + std::to_string(p.gamma) +
                   ", delta=" + std::to_string(p.delta) +
                   ", sigma=" + std::to_string(p.sigma) + ")");
      }
      x = std::max(nx, kPopulationFloor);
      y = std::max(ny, kPopulationFloor);
    }
    emit(i);
  }
  return out;
}

std::string to_string(PredPreySplit split) {
  switch (split) {
    case PredPreySplit::Interpolation:
      return "interpolation";
    case PredPreySplit::Forecasting:
      return "forecasting";
    case PredPreySplit::Reconstruction:
      return "reconstruction";
  }
  return "unknown";
}

PredPreySplit predprey_split_from_string(const std::string& name) {
  if (name == "interpolation") return PredPreySplit::Interpolation;
  if (name == "forecasting") return PredPreySplit::Forecasting;
  if (name == "reconstruction") return PredPreySplit::Reconstruction;
  throw std::invalid_argument("unknown predprey split '" + name + "'");
}

namespace {

// Sorted random subset of grid indices with t >= 0.
std::vector<Point> retain_series(const LotkaVolterraTrajectory& traj,
                                 const std::vector<double>& values, int channel,
                                 const PredPreySpec& spec, RngStream& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < traj.time.size(); ++i) {
    if (traj.time[i] >= 0.0) eligible.push_back(i);
  }
  const auto want = static_cast<std::size_t>(
      rng.uniform_int(spec.min_points, spec.max_points));
  const std::size_t n = std::min(want, eligible.size());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(i),
        static_cast<std::int64_t>(eligible.size()) - 1));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(n);
  std::sort(eligible.begin(), eligible.end());
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t idx : eligible) {
    out.push_back({traj.time[idx], values[idx], channel});
  }
  return out;
}

void add_target(Task& task, const Point& p) {
  task.targets.push_back({p.x, p.channel});
  task.target_outputs->push_back(p.y);
}

}  // namespace

Task sample_predprey_task(const LotkaVolterraTrajectory& trajectory,
                          const PredPreySpec& spec, RngStream& rng) {
  if (trajectory.time.empty() || trajectory.time.front() > 0.0 + 1e-9 ||
      trajectory.time.back() < 100.0 - 1e-9) {
    throw std::invalid_argument(
        "sample_predprey_task: trajectory must cover [0, 100]");
  }
  if (spec.min_points < 1 || spec.max_points < spec.min_points) {
    throw std::invalid_argument("PredPreySpec: invalid point counts");
  }
  const std::vector<Point> prey =
      retain_series(trajectory, trajectory.prey, kPreyChannel, spec, rng);
  const std::vector<Point> predator = retain_series(
      trajectory, trajectory.predator, kPredatorChannel, spec, rng);

  Task task;
  task.target_outputs.emplace();

  auto forecast_split = [&](const std::vector<Point>& series) {
    if (series.empty() || series.back().x < spec.forecast_min_time) {
      throw std::invalid_argument("sample_predprey_task: no feasible split");
    }
    // Resample the split time until at least one target remains.
    for (;;) {
      const double cut =
          rng.uniform(spec.forecast_min_time, spec.forecast_max_time);
      if (series.back().x >= cut) return cut;
    }
  };

  switch (spec.split) {
    case PredPreySplit::Interpolation: {
      for (const auto* series : {&prey, &predator}) {
        const std::size_t n = series->size();
        const auto n_targets = static_cast<std::size_t>(
            rng.uniform_int(1, static_cast<std::int64_t>(std::max<std::size_t>(n / 3, 1))));
        const std::vector<std::size_t> perm = rng.permutation(n);
        std::vector<bool> is_target(n, false);
        for (std::size_t i = 0; i < n_targets; ++i) is_target[perm[i]] = true;
        for (std::size_t i = 0; i < n; ++i) {
          if (is_target[i]) {
            add_target(task, (*series)[i]);
          } else {
            task.context.push_back((*series)[i]);
          }
        }
      }
      break;
    }
    case PredPreySplit::Forecasting: {
      const double cut =
          forecast_split(prey.back().x >= predator.back().x ? prey : predator);
      for (const auto* series : {&prey, &predator}) {
        for (const auto& p : *series) {
          if (p.x < cut) {
            task.context.push_back(p);
          } else {
            add_target(task, p);
          }
        }
      }
      break;
    }
    case PredPreySplit::Reconstruction: {
      const bool split_prey = rng.bernoulli(0.5);
      const auto& chosen = split_prey ? prey : predator;
      const auto& other = split_prey ? predator : prey;
      const double cut = forecast_split(chosen);
      for (const auto& p : chosen) {
        if (p.x < cut) {
          task.context.push_back(p);
        } else {
          add_target(task, p);
        }
      }
      for (const auto& p : other) task.context.push_back(p);
      break;
    }
  }
  return task;
}

}  // namespace arcnp::gen
