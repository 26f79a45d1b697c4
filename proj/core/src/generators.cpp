#include "arcnp/generators.hpp"

#include <cmath>
#include <stdexcept>

#include "arcnp/gaussian.hpp"

namespace arcnp::gen {
namespace {

std::vector<double> sample_inputs(const TaskSpec& spec, std::size_t n,
                                  RngStream& rng) {
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.uniform(spec.lower, spec.upper);
  return xs;
}

std::size_t sample_context_size(const TaskSpec& spec, RngStream& rng) {
  return static_cast<std::size_t>(
      rng.uniform_int(spec.min_context, spec.max_context));
}

// The first `n_context` (x, y) pairs become the context, the rest targets.
Task split_task(const std::vector<double>& xs, const std::vector<double>& ys,
                std::size_t n_context) {
  Task task;
  task.context.reserve(n_context);
  for (std::size_t i = 0; i < n_context; ++i) {
    task.context.push_back({xs[i], ys[i], 0});
  }
  std::vector<double> outputs;
  for (std::size_t i = n_context; i < xs.size(); ++i) {
    task.targets.push_back({xs[i], 0});
    outputs.push_back(ys[i]);
  }
  task.target_outputs = std::move(outputs);
  return task;
}

double wrap_unit(double v) {
  double y = v - std::floor(v);
  // v slightly below an integer can round up to exactly 1.
  if (y >= 1.0) y = 0.0;
  return y;
}

}  // namespace

std::string to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::EQ:
      return "eq";
    case ProcessKind::Matern52:
      return "matern52";
    case ProcessKind::WeaklyPeriodic:
      return "weakly-periodic";
    case ProcessKind::Sawtooth:
      return "sawtooth";
    case ProcessKind::AuxiliarySawtooth:
      return "aux-sawtooth";
    case ProcessKind::Mixture:
      return "mixture";
    case ProcessKind::FunctionMixture:
      return "function-mixture";
    case ProcessKind::Audio:
      return "audio";
  }
  return "unknown";
}

ProcessKind process_kind_from_string(const std::string& name) {
  for (auto k : {ProcessKind::EQ, ProcessKind::Matern52,
                 ProcessKind::WeaklyPeriodic, ProcessKind::Sawtooth,
                 ProcessKind::AuxiliarySawtooth, ProcessKind::Mixture,
                 ProcessKind::FunctionMixture, ProcessKind::Audio}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown process '" + name + "'");
}

TaskSpec TaskSpec::defaults_for(ProcessKind process) {
  TaskSpec spec;
  spec.process = process;
  switch (process) {
    case ProcessKind::EQ:
    case ProcessKind::Matern52:
    case ProcessKind::WeaklyPeriodic:
      spec.max_context = 30;
      spec.num_targets = 50;
      break;
    case ProcessKind::Sawtooth:
    case ProcessKind::Mixture:
      spec.max_context = 30;
      spec.num_targets = 100;
      break;
    case ProcessKind::AuxiliarySawtooth:
    case ProcessKind::Audio:
      spec.max_context = 75;
      spec.num_targets = 100;
      break;
    case ProcessKind::FunctionMixture:
      spec.max_context = 5;
      spec.num_targets = 1;
      break;
  }
  return spec;
}

void TaskSpec::validate() const {
  if (min_context < 0 || max_context < min_context || num_targets < 0) {
    throw std::invalid_argument("TaskSpec: invalid sizes");
  }
  if (!(lower < upper)) throw std::invalid_argument("TaskSpec: lower >= upper");
}

gp::GpModel default_gp_model(ProcessKind process) {
  gp::GpModel model;
  model.noise_variance = 0.05;
  switch (process) {
    case ProcessKind::EQ:
      model.kernel = gp::Kernel::eq(0.25);
      break;
    case ProcessKind::Matern52:
      model.kernel = gp::Kernel::matern52(0.25);
      break;
    case ProcessKind::WeaklyPeriodic:
      model.kernel = gp::Kernel::weakly_periodic(0.5, 1.0, 0.25);
      break;
    default:
      throw std::invalid_argument("default_gp_model: not a GP process");
  }
  return model;
}

Task sample_gp_task(const gp::GpModel& model, const TaskSpec& spec,
                    RngStream& rng) {
  spec.validate();
  const std::size_t nc = sample_context_size(spec, rng);
  const std::size_t n = nc + static_cast<std::size_t>(spec.num_targets);
  for (int attempt = 0;; ++attempt) {
    const std::vector<double> xs = sample_inputs(spec, n, rng);
    try {
      const CholeskyFactor factor = factorize(gp::gram(model.kernel, xs, xs));
      const Vector f =
          sample_gaussian(Vector::Zero(static_cast<Eigen::Index>(n)), factor, rng);
      const double noise_sd = std::sqrt(model.noise_variance);
      std::vector<double> ys(n);
      for (std::size_t i = 0; i < n; ++i) {
        ys[i] = f[static_cast<Eigen::Index>(i)] + noise_sd * rng.normal();
      }
      return split_task(xs, ys, nc);
    } catch (const FactorizationError&) {
      if (attempt >= 1) throw;
    }
  }
}

double SawtoothParams::operator()(double x) const {
  const double d = static_cast<double>(direction);
  if (variant == SawtoothVariant::Standard) {
    return wrap_unit(frequency * d * x + phase);
  }
  return wrap_unit(frequency * (d * x - phase));
}

SawtoothParams SawtoothParams::sample(SawtoothVariant variant, RngStream& rng) {
  SawtoothParams p;
  p.variant = variant;
  if (variant == SawtoothVariant::Standard) {
    p.frequency = rng.uniform(2.0, 4.0);
    p.direction = rng.bernoulli(0.5) ? 1 : -1;
    p.phase = rng.uniform();
  } else {
    p.frequency = rng.uniform(3.0, 5.0);
    p.direction = rng.bernoulli(0.5) ? 1 : -1;
    p.phase = rng.uniform(1.0 / p.frequency, 1.0);
  }
  return p;
}

Task sample_sawtooth_task(const TaskSpec& spec, RngStream& rng) {
  spec.validate();
  const auto variant = spec.process == ProcessKind::AuxiliarySawtooth
                           ? SawtoothVariant::Auxiliary
                           : SawtoothVariant::Standard;
  const SawtoothParams params = SawtoothParams::sample(variant, rng);
  const std::size_t nc = sample_context_size(spec, rng);
  const std::vector<double> xs =
      sample_inputs(spec, nc + static_cast<std::size_t>(spec.num_targets), rng);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = params(xs[i]);
  return split_task(xs, ys, nc);
}

Task sample_mixture_task(const TaskSpec& spec, RngStream& rng,
                         ProcessKind* chosen) {
  static constexpr ProcessKind kChoices[] = {
      ProcessKind::EQ, ProcessKind::Matern52, ProcessKind::WeaklyPeriodic,
      ProcessKind::Sawtooth};
  const ProcessKind pick = kChoices[rng.uniform_int(0, 3)];
  if (chosen != nullptr) *chosen = pick;
  TaskSpec sub = spec;
  sub.process = pick;
  if (pick == ProcessKind::Sawtooth) return sample_sawtooth_task(sub, rng);
  return sample_gp_task(default_gp_model(pick), sub, rng);
}

Task sample_function_mixture_task(const mixture::FunctionMixture& mix,
                                  const TaskSpec& spec, RngStream& rng,
                                  std::size_t* component) {
  spec.validate();
  mix.validate();
  const std::size_t c = rng.categorical(
      std::vector<double>(mix.weights.begin(), mix.weights.end()));
  if (component != nullptr) *component = c;
  const std::size_t nc = sample_context_size(spec, rng);
  const std::vector<double> xs =
      sample_inputs(spec, nc + static_cast<std::size_t>(spec.num_targets), rng);
  const double sd = std::sqrt(mix.noise_variances[c]);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ys[i] = mix.component_mean(c, xs[i]) + sd * rng.normal();
  }
  return split_task(xs, ys, nc);
}

double AudioParams::burst(double t) const {
  if (t < 0.0 || t >= period) return 0.0;
  return std::exp(-t / decay) * (std::sin(omega1 * t) + std::sin(omega2 * t));
}

double AudioParams::operator()(double x) const {
  // Exactly one shifted copy x - kT lands in [0, T).
  const double k = std::floor(x / period);
  double t = x - k * period;
  if (t >= period) t -= period;
  if (t < 0.0) t += period;
  return burst(t);
}

AudioParams AudioParams::sample(RngStream& rng) {
  AudioParams p;
  p.omega1 = rng.uniform(50.0, 70.0);
  p.omega2 = rng.uniform(50.0, 70.0);
  p.period = rng.uniform(0.75, 1.25);
  p.decay = rng.uniform(0.1, 0.3);
  return p;
}

Task sample_audio_task(const TaskSpec& spec, RngStream& rng) {
  spec.validate();
  const AudioParams params = AudioParams::sample(rng);
  const std::size_t nc = sample_context_size(spec, rng);
  const std::vector<double> xs =
      sample_inputs(spec, nc + static_cast<std::size_t>(spec.num_targets), rng);
  const double sd = std::sqrt(params.noise_variance);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ys[i] = params(xs[i]) + sd * rng.normal();
  }
  return split_task(xs, ys, nc);
}

Task sample_task(const TaskSpec& spec, RngStream& rng) {
  switch (spec.process) {
    case ProcessKind::EQ:
    case ProcessKind::Matern52:
    case ProcessKind::WeaklyPeriodic:
      return sample_gp_task(default_gp_model(spec.process), spec, rng);
    case ProcessKind::Sawtooth:
    case ProcessKind::AuxiliarySawtooth:
      return sample_sawtooth_task(spec, rng);
    case ProcessKind::Mixture:
      return sample_mixture_task(spec, rng);
    case ProcessKind::FunctionMixture:
      return sample_function_mixture_task(mixture::FunctionMixture::auxiliary(),
                                          spec, rng);
    case ProcessKind::Audio:
      return sample_audio_task(spec, rng);
  }
  throw std::invalid_argument("sample_task: unknown process");
}

}  // namespace arcnp::gen
