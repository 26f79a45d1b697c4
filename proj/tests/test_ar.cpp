#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "arcnp/adapter.hpp"
#include "arcnp/ar.hpp"
#include "arcnp/gaussian.hpp"
#include "arcnp/generators.hpp"

namespace arcnp::ar {
namespace {

const gp::GpModel kEq{gp::Kernel::eq(0.25), 0.05};

std::vector<Point> random_context(RngStream& rng, int n) {
  std::vector<Point> c;
  for (int i = 0; i < n; ++i) c.push_back({rng.uniform(-2, 2), rng.normal(), 0});
  return c;
}

std::vector<Input> random_targets(RngStream& rng, int n) {
  std::vector<Input> t;
  for (int i = 0; i < n; ++i) t.push_back({rng.uniform(-2, 2), 0});
  return t;
}

ModelAdapter tiny_cnp_adapter(std::uint64_t seed) {
  RngStream rng(seed);
  auto model = std::make_shared<const nn::CnpModel>(
      nn::CnpModel::initialized(nn::CnpConfig::tiny(), rng));
  return cnp_adapter(model);
}

TEST(ArLogpdf, GaussianChainRuleIsExact) {
  const ModelAdapter ideal = gp_ideal_cnp_adapter(kEq);
  RngStream rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto c = random_context(rng, static_cast<int>(rng.uniform_int(0, 15)));
    const auto t = random_targets(rng, static_cast<int>(rng.uniform_int(1, 10)));
    const auto joint = gp::gp_posterior(kEq, c, t);
    const Vector y = sample_gaussian(joint, rng);
    const std::vector<double> values(y.data(), y.data() + y.size());
    const double exact = gaussian_logpdf(y, joint);
    for (int o = 0; o < 3; ++o) {
      EXPECT_NEAR(ar_logpdf(ideal, c, t, values, Ordering::random(rng.next_u64())),
                  exact, 1e-6);
    }
    EXPECT_NEAR(ar_logpdf(ideal, c, t, values, Ordering::left_to_right()), exact, 1e-6);
  }
}

TEST(ArLogpdf, SingleTargetIsMarginal) {
  const ModelAdapter m = tiny_cnp_adapter(2);
  RngStream rng(2);
  const auto c = random_context(rng, 4);
  const std::vector<Input> t{{0.3, 0}};
  const std::vector<double> v{0.8};
  const auto pred = m.marginals(c, t);
  EXPECT_DOUBLE_EQ(ar_logpdf(m, c, t, v, Ordering::random(5)),
                   normal_logpdf(0.8, pred.means[0], pred.variances[0]));
}

TEST(ArLogpdf, EmptyTargetsGiveZero) {
  const ModelAdapter m = tiny_cnp_adapter(3);
  EXPECT_EQ(ar_logpdf(m, {}, {}, {}, Ordering::random(1)), 0.0);
  RngStream rng(1);
  const auto traj = ar_sample(m, {}, {}, Ordering::random(1), 1, rng);
  EXPECT_EQ(traj.size(), 0u);
}

TEST(ArLogpdf, FullBlockIsFactorizedMarginal) {
  const ModelAdapter m = tiny_cnp_adapter(4);
  RngStream rng(4);
  const auto c = random_context(rng, 3);
  const auto t = random_targets(rng, 5);
  const std::vector<double> v{0.1, -0.2, 0.3, 0.5, 1.0};
  const auto pred = m.marginals(c, t);
  double expected = 0;
  for (int j = 0; j < 5; ++j) expected += normal_logpdf(v[j], pred.means[j], pred.variances[j]);
  EXPECT_NEAR(ar_logpdf(m, c, t, v, Ordering::random(9), 5), expected, 1e-12);
}

TEST(ArLogpdf, SizeMismatchThrows) {
  const ModelAdapter m = tiny_cnp_adapter(5);
  const std::vector<Input> t{{0.0, 0}};
  const std::vector<double> v{1.0, 2.0};
  EXPECT_THROW(ar_logpdf(m, {}, t, v, Ordering::random(1)), std::invalid_argument);
}

TEST(ArSample, SingleTargetMatchesMarginalDistribution) {
  const ModelAdapter m = gp_ideal_cnp_adapter(kEq);
  const std::vector<Point> c{{0.0, 1.0, 0}};
  const std::vector<Input> t{{0.1, 0}};
  const auto pred = m.marginals(c, t);
  RngStream rng(6);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double y = ar_sample(m, c, t, Ordering::random(1), 1, rng).points[0].y;
    s += y;
    s2 += y * y;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, pred.means[0], 4 * std::sqrt(pred.variances[0] / n));
  EXPECT_NEAR(var, pred.variances[0], 0.05 * pred.variances[0]);
}

TEST(ArSample, FullBlockEqualsIndependentDraws) {
  const ModelAdapter m = tiny_cnp_adapter(7);
  RngStream setup(7);
  const auto c = random_context(setup, 3);
  const auto t = random_targets(setup, 6);
  const auto ord = Ordering::random(42);
  RngStream a(11), b(11);
  const auto traj = ar_sample(m, c, t, ord, t.size(), a);
  const auto pred = m.marginals(c, t);
  const auto perm = ord.permutation(t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::size_t j = perm[i];
    const double expected = m.sample(
        MarginalPrediction{Vector::Constant(1, pred.means[j]),
                           Vector::Constant(1, pred.variances[j])},
        0, b);
    EXPECT_DOUBLE_EQ(traj.points[i].y, expected);
  }
}

TEST(ArSample, ReproducibleBitForBit) {
  const ModelAdapter m = tiny_cnp_adapter(8);
  RngStream setup(8);
  const auto c = random_context(setup, 4);
  const auto t = random_targets(setup, 12);
  RngStream a(3), b(3);
  const auto t1 = ar_sample(m, c, t, Ordering::random(5), 2, a);
  const auto t2 = ar_sample(m, c, t, Ordering::random(5), 2, b);
  EXPECT_EQ(t1.values(), t2.values());
  EXPECT_EQ(t1.permutation, t2.permutation);
}

TEST(ArSample, ValuesRestoreTargetOrder) {
  const ModelAdapter m = tiny_cnp_adapter(9);
  const std::vector<Input> t{{1.0, 0}, {-1.0, 0}, {0.0, 0}};
  RngStream rng(1);
  const auto traj = ar_sample(m, {}, t, Ordering::left_to_right(), 1, rng);
  EXPECT_EQ(traj.permutation, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(traj.values()[0], traj.points[2].y);
  EXPECT_EQ(traj.points[0].x, -1.0);
}

TEST(ArSample, AdapterFailureCarriesStep) {
  ModelAdapter m = gp_ideal_cnp_adapter(kEq);
  m.predict = [](std::span<const Point> ctx, std::span<const Input> tgt) {
    if (ctx.size() >= 2) throw std::runtime_error("adapter down");
    return MarginalPrediction{Vector::Zero(static_cast<Eigen::Index>(tgt.size())),
                              Vector::Ones(static_cast<Eigen::Index>(tgt.size()))};
  };
  RngStream rng(1);
  const std::vector<Input> t{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  try {
    ar_sample(m, {}, t, Ordering::left_to_right(), 1, rng);
    FAIL();
  } catch (const RolloutError& e) {
    EXPECT_EQ(e.step(), 2u);
  }
}

TEST(Ordering, GivenMustBePermutation) {
  const std::vector<Input> t{{0, 0}, {1, 0}};
  EXPECT_THROW(Ordering::fixed({0, 0}).permutation(t), std::invalid_argument);
  EXPECT_THROW(Ordering::fixed({0}).permutation(t), std::invalid_argument);
  EXPECT_EQ(Ordering::fixed({1, 0}).permutation(t), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(ordering_kind_from_string(to_string(OrderingKind::LeftToRight)),
            OrderingKind::LeftToRight);
}

TEST(Spread, ZeroForGaussianOracle) {
  const ModelAdapter ideal = gp_ideal_cnp_adapter(kEq);
  RngStream rng(10);
  auto spec = gen::TaskSpec::defaults_for(gen::ProcessKind::EQ);
  spec.num_targets = 12;
  const Task task = gen::sample_gp_task(kEq, spec, rng);
  const auto s = ar_loglik_spread(ideal, task, 8, rng);
  EXPECT_LT(s.stddev, 1e-9);
}

TEST(Spread, SingleOrderingHasZeroStd) {
  const ModelAdapter m = tiny_cnp_adapter(11);
  RngStream rng(11);
  Task task;
  task.targets = random_targets(rng, 5);
  task.target_outputs = std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_EQ(ar_loglik_spread(m, task, 1, rng).stddev, 0.0);
  EXPECT_GT(ar_loglik_spread(m, task, 6, rng).stddev, 0.0);
}

TEST(SmoothSample, NoiselessPosteriorInterpolatesTrajectory) {
  const gp::GpModel noiseless{gp::Kernel::eq(0.25), 0.0};
  const ModelAdapter m = gp_ideal_cnp_adapter(noiseless);
  std::vector<Input> grid;
  for (int i = 0; i < 8; ++i) grid.push_back({-2.0 + 0.5 * i, 0});
  RngStream rng(12);
  const auto s = smooth_sample(m, {}, grid, grid, rng);
  const auto noisy = s.noisy.values();
  ASSERT_EQ(s.denoised.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(s.denoised[i], noisy[i], 1e-9);
}

TEST(SmoothSample, QueryShape) {
  const ModelAdapter m = gp_ideal_cnp_adapter(kEq);
  RngStream rng(13);
  const auto grid = random_targets(rng, 6);
  const auto query = random_targets(rng, 17);
  const auto s = smooth_sample(m, {}, grid, query, rng);
  EXPECT_EQ(s.denoised.size(), 17u);
  EXPECT_EQ(s.noisy.size(), 6u);
}

TEST(AuxAr, ZeroLengthIsPlainMarginal) {
  const ModelAdapter m = tiny_cnp_adapter(14);
  RngStream rng(14);
  const auto c = random_context(rng, 5);
  const auto t = random_targets(rng, 3);
  const auto pred = m.marginals(c, t);
  for (std::size_t count : {1u, 16u}) {
    const auto mix = aux_ar_predict(m, c, t, uniform_inputs(-2, 2), 0, count, rng);
    ASSERT_EQ(mix.components(), 1u);
    EXPECT_EQ(mix.means[0], pred.means);
    EXPECT_EQ(mix.variances[0], pred.variances);
    EXPECT_NEAR(mix.log_density(1, 0.4),
                normal_logpdf(0.4, pred.means[1], pred.variances[1]), 1e-12);
  }
}

TEST(AuxAr, MixtureDensityMatchesDirectAverage) {
  const ModelAdapter m = mixture_ideal_cnp_adapter(mixture::FunctionMixture::auxiliary());
  RngStream rng(15);
  const std::vector<Input> t{{0.5, 0}};
  const auto mix = aux_ar_predict(m, {}, t, uniform_inputs(-2, 2), 4, 8, rng);
  ASSERT_EQ(mix.components(), 8u);
  double direct = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    direct += std::exp(normal_logpdf(0.9, mix.means[k][0], mix.variances[k][0])) / 8;
  }
  EXPECT_NEAR(mix.log_density(0, 0.9), std::log(direct), 1e-12);
}

TEST(Adapter, Log1pTransformRoundTripsAndAddsJacobian) {
  EXPECT_NEAR(invert_transform(OutputTransform::Log1p,
                               apply_transform(OutputTransform::Log1p, 41.5)),
              41.5, 1e-12);
  EXPECT_THROW(apply_transform(OutputTransform::Log1p, -1.5), std::domain_error);
  ModelAdapter m = trivial_adapter();
  m.transform = OutputTransform::Log1p;
  const MarginalPrediction pred{Vector::Constant(1, 1.0), Vector::Constant(1, 0.5)};
  const double y = 3.0;
  EXPECT_NEAR(m.log_density(pred, 0, y),
              normal_logpdf(std::log1p(y), 1.0, 0.5) - std::log1p(y), 1e-14);
  EXPECT_NEAR(m.point_estimate(pred, 0), std::expm1(1.0), 1e-14);
}

TEST(Adapter, TransformedContextReachesModel) {
  ModelAdapter m = trivial_adapter();
  m.transform = OutputTransform::Log1p;
  std::vector<double> seen;
  m.predict = [&seen](std::span<const Point> ctx, std::span<const Input> tgt) {
    for (const auto& p : ctx) seen.push_back(p.y);
    return trivial_prediction(ctx, tgt);
  };
  const std::vector<Point> c{{0.0, std::expm1(2.0), 0}};
  const std::vector<Input> t{{0.0, 0}};
  m.marginals(c, t);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NEAR(seen[0], 2.0, 1e-14);
}

TEST(Adapter, WarnsOncePastTrainedContextSize) {
  std::vector<std::string> warnings;
  ModelAdapter m = gp_ideal_cnp_adapter(kEq);
  m.max_context = 3;
  m.warn = [&](const std::string& w) { warnings.push_back(w); };
  RngStream rng(1);
  const auto t = random_targets(rng, 5);
  ar_sample(m, random_context(rng, 2), t, Ordering::random(1), 1, rng);
  EXPECT_EQ(warnings.size(), 1u);
  warnings.clear();
  ar_sample(m, random_context(rng, 0), random_targets(rng, 3), Ordering::random(1), 1, rng);
  EXPECT_TRUE(warnings.empty());
}

TEST(Adapter, TrivialPredictionMoments) {
  const std::vector<Input> t{{0.0, 0}};
  const std::vector<Point> flat{{0, 2, 0}, {1, 2, 0}};
  auto p = trivial_prediction(flat, t);
  EXPECT_EQ(p.means[0], 2.0);
  EXPECT_NEAR(p.variances[0], 1e-6, 1e-18);
  p = trivial_prediction({}, t);
  EXPECT_EQ(p.means[0], 0.0);
  EXPECT_EQ(p.variances[0], 1.0);
  const std::vector<Point> spread{{0, 0, 0}, {1, 2, 0}};
  p = trivial_prediction(spread, t);
  EXPECT_EQ(p.means[0], 1.0);
  EXPECT_NEAR(p.variances[0], 1.0, 1e-15);
}

TEST(Adapter, TrivialPredictionPerChannel) {
  const std::vector<Point> c{{0, 10, 0}, {1, 12, 0}, {0, 1, 1}, {1, 3, 1}};
  const std::vector<Input> t{{0.5, 0}, {0.5, 1}};
  const auto p = trivial_prediction(c, t);
  EXPECT_EQ(p.means[0], 11.0);
  EXPECT_EQ(p.means[1], 2.0);
}

}  // namespace
}  // namespace arcnp::ar
