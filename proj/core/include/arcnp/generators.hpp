#pragma once

#include <string>

#include "arcnp/gp.hpp"
#include "arcnp/mixture.hpp"
#include "arcnp/rng.hpp"
#include "arcnp/types.hpp"

namespace arcnp::gen {

enum class ProcessKind {
  EQ,
  Matern52,
  WeaklyPeriodic,
  Sawtooth,           // frequency in [2, 4], phase ~ U[0, 1]
  AuxiliarySawtooth,  // frequency in [3, 5], phase ~ U[1/omega, 1]
  Mixture,            // one of EQ / Matern52 / WeaklyPeriodic / Sawtooth
  FunctionMixture,
  Audio,
};

std::string to_string(ProcessKind kind);
ProcessKind process_kind_from_string(const std::string& name);

/// Sizes and ranges of a sampled task. Context size is uniform on
/// {min_context, ..., max_context}; inputs are i.i.d. uniform on
/// [lower, upper].
struct TaskSpec {
  ProcessKind process = ProcessKind::EQ;
  int min_context = 0;
  int max_context = 30;
  int num_targets = 50;
  double lower = -2.0;
  double upper = 2.0;

  /// Defaults for one-dimensional inputs: 0..30 contexts, 50 targets for
  /// the GP processes and 100 for the sawtooth and mixture processes.
  static TaskSpec defaults_for(ProcessKind process);
  void validate() const;
};

/// GP model of a kernel-based process with the default 1D parameters
/// (l = 0.25, ld = 0.5, lp = 1, p = 0.25) and noise variance 0.05.
gp::GpModel default_gp_model(ProcessKind process);

/// Draws inputs, then one joint sample of f at all inputs plus i.i.d.
/// observation noise. Retries once with fresh inputs if the joint
/// covariance cannot be factorized.
Task sample_gp_task(const gp::GpModel& model, const TaskSpec& spec,
                    RngStream& rng);

enum class SawtoothVariant { Standard, Auxiliary };

struct SawtoothParams {
  SawtoothVariant variant = SawtoothVariant::Standard;
  double frequency = 3.0;
  int direction = 1;  // -1 or +1
  double phase = 0.0;

  /// Standard:  (omega * d * x + phase) mod 1
  /// Auxiliary: (omega * (d * x - phase)) mod 1
  /// Always in [0, 1).
  double operator()(double x) const;

  static SawtoothParams sample(SawtoothVariant variant, RngStream& rng);
};

Task sample_sawtooth_task(const TaskSpec& spec, RngStream& rng);

/// Picks EQ, Matern52, WeaklyPeriodic or Sawtooth (standard) with equal
/// probability. `chosen`, when given, receives the pick.
Task sample_mixture_task(const TaskSpec& spec, RngStream& rng,
                         ProcessKind* chosen = nullptr);

Task sample_function_mixture_task(const mixture::FunctionMixture& mix,
                                  const TaskSpec& spec, RngStream& rng,
                                  std::size_t* component = nullptr);

/// Periodically repeated decaying two-tone burst:
///   s(t) = exp(-t / tau) (sin(w1 t) + sin(w2 t)) for 0 <= t < T, else 0
///   f(x) = sum_k s(x - k T)
struct AudioParams {
  double omega1 = 60.0;
  double omega2 = 60.0;
  double period = 1.0;
  double decay = 0.2;
  double noise_variance = 0.001;

  double burst(double t) const;
  double operator()(double x) const;

  static AudioParams sample(RngStream& rng);
};

Task sample_audio_task(const TaskSpec& spec, RngStream& rng);

/// Dispatches on spec.process. FunctionMixture uses
/// FunctionMixture::auxiliary().
Task sample_task(const TaskSpec& spec, RngStream& rng);

}  // namespace arcnp::gen
