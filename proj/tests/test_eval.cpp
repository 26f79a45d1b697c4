#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "arcnp/ar.hpp"
#include "arcnp/eval.hpp"
#include "arcnp/gaussian.hpp"
#include "arcnp/generators.hpp"

namespace arcnp::eval {
namespace {

const gp::GpModel kEq{gp::Kernel::eq(0.25), 0.05};

std::vector<Task> eq_tasks(std::uint64_t seed, int n) {
  RngStream rng(seed);
  const auto spec = gen::TaskSpec::defaults_for(gen::ProcessKind::EQ);
  std::vector<Task> out;
  for (int i = 0; i < n; ++i) out.push_back(gen::sample_gp_task(kEq, spec, rng));
  return out;
}

TaskDensityFn standard_normal_density() {
  return [](const Task& t, std::size_t) {
    double s = 0;
    for (double y : *t.target_outputs) s += normal_logpdf(y, 0, 1);
    return s;
  };
}

TEST(EvalLoglik, StandardNormalAtZero) {
  Task t;
  t.targets = {{0, 0}, {1, 0}, {2, 0}};
  t.target_outputs = std::vector<double>{0, 0, 0};
  const auto r = eval_loglik(standard_normal_density(), {t, t});
  EXPECT_NEAR(r.per_task[0], -0.9189385, 1e-7);
  EXPECT_NEAR(r.mean, -0.9189385, 1e-7);
}

TEST(EvalLoglik, SingleTaskHasZeroError) {
  Task t;
  t.targets = {{0, 0}};
  t.target_outputs = std::vector<double>{0.3};
  const auto r = eval_loglik(standard_normal_density(), {t});
  EXPECT_EQ(r.ci95, 0.0);
  EXPECT_EQ(r.n_tasks(), 1u);
}

TEST(EvalLoglik, FailuresAreExcludedAndCounted) {
  auto tasks = eq_tasks(1, 6);
  const TaskDensityFn flaky = [](const Task& t, std::size_t i) {
    if (i == 2) throw std::runtime_error("bad");
    if (i == 4) return std::nan("");
    return -static_cast<double>(t.targets.size());
  };
  const auto r = eval_loglik(flaky, tasks);
  EXPECT_EQ(r.n_excluded, 2u);
  EXPECT_EQ(r.n_tasks(), 4u);
  EXPECT_DOUBLE_EQ(r.mean, -1.0);
}

TEST(EvalLoglik, InvariantToTaskOrderAndThreads) {
  auto tasks = eq_tasks(2, 40);
  const auto density = marginal_density(gp_ideal_cnp_adapter(kEq));
  const auto a = eval_loglik(density, tasks);
  std::reverse(tasks.begin(), tasks.end());
  const auto b = eval_loglik(density, tasks, 4);
  EXPECT_NEAR(a.mean, b.mean, 1e-12);
  EXPECT_NEAR(a.ci95, b.ci95, 1e-12);
}

TEST(TrivialBaseline, ConstantContextUsesFloor) {
  Task t;
  t.context = {{0, 2, 0}, {1, 2, 0}};
  t.targets = {{0.5, 0}};
  t.target_outputs = std::vector<double>{2.0};
  const double got = trivial_baseline()(t, 0);
  EXPECT_NEAR(got, normal_logpdf(2.0, 2.0, 1e-6), 1e-9);
}

TEST(TrivialBaseline, EmptyContextIsStandardNormal) {
  Task t;
  t.targets = {{0.5, 0}, {1.0, 0}};
  t.target_outputs = std::vector<double>{0.2, -1.0};
  EXPECT_NEAR(trivial_baseline()(t, 0),
              normal_logpdf(0.2, 0, 1) + normal_logpdf(-1.0, 0, 1), 1e-14);
}

TEST(TrivialBaseline, PopulationStandardDeviation) {
  Task t;
  t.context = {{0, 0, 0}, {1, 2, 0}};
  t.targets = {{0.5, 0}};
  t.target_outputs = std::vector<double>{1.5};
  EXPECT_NEAR(trivial_baseline()(t, 0), normal_logpdf(1.5, 1, 1), 1e-14);
}

TEST(TrivialBaseline, TypicalSawtoothTaskNearGaussianFit) {
  // The mean is dominated by tasks with a single context point, where the
  // floored standard deviation is catastrophic; the median task is what a
  // Gaussian fit to the context achieves.
  RngStream rng(3);
  const auto spec = gen::TaskSpec::defaults_for(gen::ProcessKind::Sawtooth);
  std::vector<Task> tasks;
  for (int i = 0; i < 512; ++i) tasks.push_back(gen::sample_sawtooth_task(spec, rng));
  auto r = eval_loglik(trivial_baseline(), tasks);
  std::vector<double> v = r.per_task;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  EXPECT_NEAR(v[v.size() / 2], -0.18, 0.1);
}

TEST(KlToTruth, ExactCandidateIsZero) {
  const auto tasks = eq_tasks(4, 50);
  const JointFn exact = [](const Task& t) { return gp::gp_posterior(kEq, t.context, t.targets); };
  const auto r = eval_kl_to_truth(kEq, exact, tasks);
  for (double v : r.per_task) EXPECT_NEAR(v, 0.0, 1e-10);
  const JointFn gnp = [](const Task& t) { return gp::ideal_gnp_gp(kEq, t.context, t.targets); };
  EXPECT_NEAR(eval_kl_to_truth(kEq, gnp, tasks).mean, 0.0, 1e-10);
}

TEST(KlToTruth, DiagonalBaselinePositiveWithCorrelation) {
  const auto tasks = eq_tasks(5, 30);
  const JointFn diag = [](const Task& t) {
    return diagonalize(gp::gp_posterior(kEq, t.context, t.targets));
  };
  const auto r = eval_kl_to_truth(kEq, diag, tasks);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto post = gp::gp_posterior(kEq, tasks[i].context, tasks[i].targets);
    Matrix off = post.covariance;
    off.diagonal().setZero();
    if (tasks[i].targets.size() >= 2 && off.cwiseAbs().maxCoeff() > 1e-6) {
      EXPECT_GT(r.per_task[i], 0.0);
    }
  }
}

TEST(KlToTruth, MonteCarloAgreesWithExact) {
  const auto tasks = eq_tasks(6, 4);
  const JointFn diag = [](const Task& t) {
    return diagonalize(gp::gp_posterior(kEq, t.context, t.targets));
  };
  const CandidateDensityFn diag_density = [&](const Task& t, std::size_t, const Vector& y) {
    return gaussian_logpdf(y, diag(t));
  };
  const auto exact = eval_kl_to_truth(kEq, diag, tasks);
  const auto mc = eval_kl_to_truth_mc(kEq, diag_density, tasks, 2000, 7);
  ASSERT_TRUE(mc.mc_standard_error);
  ASSERT_EQ(mc.per_task_se.size(), tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_NEAR(mc.per_task[i], exact.per_task[i], 4 * mc.per_task_se[i] + 1e-12);
  }
}

TEST(KlToTruth, ArIdealCnpIsZero) {
  const auto tasks = eq_tasks(8, 10);
  const auto ideal = gp_ideal_cnp_adapter(kEq);
  const CandidateDensityFn ar = [&](const Task& t, std::size_t i, const Vector& y) {
    const std::vector<double> v(y.data(), y.data() + y.size());
    return ar::ar_logpdf(ideal, t.context, t.targets, v, ar::Ordering::random(i));
  };
  const auto r = eval_kl_to_truth_mc(kEq, ar, tasks, 16, 1);
  for (double v : r.per_task) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(MetricReport, CsvAndJsonShape) {
  MetricReport r;
  r.experiment = "eq-kl";
  r.model = "exact";
  r.metric = "kl";
  r.per_task = {0.1, 0.2, 0.4};
  summarize(r);
  EXPECT_EQ(MetricReport::csv_header(), "experiment,model,metric,mean,ci95,n_tasks,n_excluded");
  const std::string row = r.csv_row();
  EXPECT_EQ(row.rfind("eq-kl,exact,kl,0.233333333,", 0), 0u) << row;
  const auto j = r.to_json();
  EXPECT_EQ(j["n_tasks"], 3);
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
}

}  // namespace
}  // namespace arcnp::eval
