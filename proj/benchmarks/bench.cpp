#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "arcnp/adapter.hpp"
#include "arcnp/ar.hpp"
#include "arcnp/cnp.hpp"
#include "arcnp/generators.hpp"
#include "arcnp/gp.hpp"

namespace {

using namespace arcnp;

Task eq_task(int contexts, int targets) {
  RngStream rng(11);
  auto spec = gen::TaskSpec::defaults_for(gen::ProcessKind::EQ);
  spec.min_context = spec.max_context = contexts;
  spec.num_targets = targets;
  return gen::sample_gp_task(gen::default_gp_model(gen::ProcessKind::EQ), spec, rng);
}

void BM_CnpForward(benchmark::State& state) {
  RngStream rng(1);
  const auto model = nn::CnpModel::initialized(nn::CnpConfig{}, rng);
  const Task t = eq_task(static_cast<int>(state.range(0)), 50);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(t.context, t.targets));
}
BENCHMARK(BM_CnpForward)->Arg(0)->Arg(10)->Arg(30);

void BM_GpPosterior(benchmark::State& state) {
  const auto gp = gen::default_gp_model(gen::ProcessKind::EQ);
  const Task t = eq_task(static_cast<int>(state.range(0)), 50);
  for (auto _ : state) benchmark::DoNotOptimize(gp::gp_posterior(gp, t.context, t.targets));
}
BENCHMARK(BM_GpPosterior)->Arg(10)->Arg(30);

void BM_ArRolloutCnp(benchmark::State& state) {
  RngStream init(2);
  const auto model = cnp_adapter(
      std::make_shared<const nn::CnpModel>(nn::CnpModel::initialized(nn::CnpConfig{}, init)));
  const Task t = eq_task(10, static_cast<int>(state.range(0)));
  RngStream rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ar::ar_sample(model, t.context, t.targets, ar::Ordering::random(4), 1, rng));
  }
}
BENCHMARK(BM_ArRolloutCnp)->Arg(10)->Arg(50);

void BM_ArRolloutIdealGp(benchmark::State& state) {
  const auto model = gp_ideal_cnp_adapter(gen::default_gp_model(gen::ProcessKind::EQ));
  const Task t = eq_task(10, static_cast<int>(state.range(0)));
  RngStream rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ar::ar_sample(model, t.context, t.targets, ar::Ordering::random(6), 1, rng));
  }
}
BENCHMARK(BM_ArRolloutIdealGp)->Arg(10)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
