#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "arcnp/gaussian.hpp"
#include "arcnp/parallel.hpp"
#include "arcnp/rng.hpp"

namespace arcnp {
namespace {

GaussianJoint random_joint(RngStream& rng, int dim) {
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
  GaussianJoint g;
  g.mean = Vector(dim);
  for (int i = 0; i < dim; ++i) g.mean[i] = rng.normal();
  g.covariance = a * a.transpose() + 0.5 * Matrix::Identity(dim, dim);
  return g;
}

GaussianJoint scalar(double mean, double var) {
  GaussianJoint g;
  g.mean = Vector::Constant(1, mean);
  g.covariance = Matrix::Constant(1, 1, var);
  return g;
}

TEST(RngStream, EqualSeedsGiveIdenticalDraws) {
  RngStream a(42), b(42);
  for (int i = 0; i < 10000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    const double ua = a.normal(), ub = b.normal();
    ASSERT_EQ(std::memcmp(&ua, &ub, sizeof ua), 0);
  }
}

TEST(RngStream, ForkDoesNotAdvanceParent) {
  RngStream a(7), b(7);
  RngStream child = a.fork(3);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  RngStream again = b.fork(3);
  EXPECT_EQ(child.next_u64(), again.next_u64());
  EXPECT_EQ(child.seed(), 7ULL ^ splitmix64(3));
}

TEST(RngStream, UniformAndPermutationRanges) {
  RngStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.uniform_int(-2, 3);
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 3);
  }
  auto p = rng.permutation(20);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(5);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(GaussianLogpdf, StandardNormalAtZero) {
  Vector v = Vector::Zero(1);
  EXPECT_NEAR(gaussian_logpdf(v, scalar(0, 1)), -0.9189385, 1e-7);
}

TEST(GaussianLogpdf, TwoStandardPeaks) {
  GaussianJoint g;
  g.mean = Vector::Ones(2);
  g.covariance = Matrix::Identity(2, 2);
  EXPECT_NEAR(gaussian_logpdf(Vector::Ones(2), g), -1.8378771, 1e-7);
}

TEST(GaussianLogpdf, MatchesScalarClosedForm) {
  const double expected = -0.5 * std::log(2 * std::numbers::pi * 0.25) -
                          0.5 * (0.2 * 0.2) / 0.25;
  EXPECT_NEAR(gaussian_logpdf(Vector::Constant(1, 0.3), scalar(0.1, 0.25)),
              expected, 1e-12);
}

TEST(GaussianLogpdf, OneDimensionalEqualsScalarPdf) {
  RngStream rng(11);
  for (int i = 0; i < 200; ++i) {
    const double m = rng.normal(), v = 0.01 + rng.uniform() * 4, y = rng.normal(0, 3);
    EXPECT_NEAR(gaussian_logpdf(Vector::Constant(1, y), scalar(m, v)),
                normal_logpdf(y, m, v), 1e-12);
  }
}

TEST(GaussianLogpdf, DimensionMismatchThrows) {
  EXPECT_THROW(gaussian_logpdf(Vector::Zero(2), scalar(0, 1)),
               std::invalid_argument);
}

TEST(Factorize, NonPositiveDefiniteCarriesDimension) {
  Matrix bad(3, 3);
  bad << 1, 0, 0, 0, -1, 0, 0, 0, 1;
  try {
    factorize(bad);
    FAIL();
  } catch (const FactorizationError& e) {
    EXPECT_EQ(e.dimension(), 3u);
  }
}

TEST(Factorize, SingularMatrixGetsJitter) {
  Matrix m = Matrix::Ones(3, 3);
  const auto f = factorize(m);
  EXPECT_GT(f.jitter, 0.0);
  Matrix plain = Matrix::Identity(2, 2);
  EXPECT_EQ(factorize(plain).jitter, 0.0);
}

TEST(GaussianKl, IdenticalIsZero) {
  EXPECT_NEAR(gaussian_kl(scalar(0, 1), scalar(0, 1)), 0.0, 1e-12);
}

TEST(GaussianKl, MeanShift) {
  EXPECT_NEAR(gaussian_kl(scalar(1, 1), scalar(0, 1)), 0.5, 1e-12);
}

TEST(GaussianKl, SelfKlZeroForRandomJoints) {
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_joint(rng, 1 + static_cast<int>(i % 8));
    EXPECT_NEAR(gaussian_kl(p, p), 0.0, 1e-12);
  }
}

TEST(GaussianKl, NonNegative) {
  RngStream rng(4);
  for (int i = 0; i < 100; ++i) {
    const int d = 1 + i % 5;
    EXPECT_GE(gaussian_kl(random_joint(rng, d), random_joint(rng, d)), 0.0);
  }
}

TEST(GaussianKl, AgreesWithMonteCarlo) {
  RngStream rng(12);
  const auto p = random_joint(rng, 3);
  const auto q = random_joint(rng, 3);
  const auto fp = factorize(p.covariance);
  RngStream draws(99);
  const std::size_t n = 1000000;
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector y = sample_gaussian(p.mean, fp, draws);
    const double d = gaussian_logpdf(y, p) - gaussian_logpdf(y, q);
    s += d;
    s2 += d * d;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  EXPECT_NEAR(gaussian_kl(p, q), mean, 3 * se);
}

TEST(GaussianKl, DimensionMismatchThrows) {
  RngStream rng(1);
  EXPECT_THROW(gaussian_kl(random_joint(rng, 2), random_joint(rng, 3)),
               std::invalid_argument);
}

TEST(McKl, IdenticalDistributionsNearZero) {
  RngStream rng(8);
  auto lp = [](const Vector& y) { return normal_logpdf(y[0], 0.3, 2.0); };
  auto sampler = [](RngStream& r) {
    return Vector::Constant(1, r.normal(0.3, std::sqrt(2.0)));
  };
  const auto est = mc_kl(lp, lp, sampler, 1000, rng);
  EXPECT_NEAR(est.estimate, 0.0, 1e-12);
}

TEST(McKl, MeanShiftWithinThreeSe) {
  RngStream rng(9);
  auto lp = [](const Vector& y) { return normal_logpdf(y[0], 1, 1); };
  auto lq = [](const Vector& y) { return normal_logpdf(y[0], 0, 1); };
  auto sampler = [](RngStream& r) { return Vector::Constant(1, r.normal(1, 1)); };
  const auto est = mc_kl(lp, lq, sampler, 100000, rng);
  EXPECT_GT(est.standard_error, 0.0);
  EXPECT_NEAR(est.estimate, 0.5, 3 * est.standard_error);
}

TEST(McKl, ReproducibleGivenSeed) {
  auto lp = [](const Vector& y) { return normal_logpdf(y[0], 1, 1); };
  auto lq = [](const Vector& y) { return normal_logpdf(y[0], 0, 2); };
  auto sampler = [](RngStream& r) { return Vector::Constant(1, r.normal(1, 1)); };
  RngStream a(5), b(5);
  EXPECT_EQ(mc_kl(lp, lq, sampler, 500, a).estimate,
            mc_kl(lp, lq, sampler, 500, b).estimate);
}

TEST(McKl, NonFiniteReportsDrawIndex) {
  RngStream rng(1);
  int calls = 0;
  auto lp = [](const Vector&) { return 0.0; };
  auto lq = [&calls](const Vector&) {
    return ++calls == 4 ? -std::numeric_limits<double>::infinity() : 0.0;
  };
  auto sampler = [](RngStream& r) { return Vector::Constant(1, r.normal()); };
  try {
    mc_kl(lp, lq, sampler, 10, rng);
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.index(), 3u);
  }
}

TEST(McKl, RejectsTooFewSamples) {
  RngStream rng(1);
  auto lp = [](const Vector&) { return 0.0; };
  auto sampler = [](RngStream& r) { return Vector::Constant(1, r.normal()); };
  EXPECT_THROW(mc_kl(lp, lp, sampler, 1, rng), std::invalid_argument);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<int> hits(101, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

}  // namespace
}  // namespace arcnp
