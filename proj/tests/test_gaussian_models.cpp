#include "imba/gaussian_models.hpp"
#include "imba/random.hpp"
#include "imba/theory.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace imba;

TEST(Mixture1D, Validation) {
  EXPECT_THROW((Mixture1D{1, -1, 0}.validate()), Error);
  EXPECT_THROW((Mixture1D{1, -1, -1}.validate()), Error);
  EXPECT_THROW((Mixture1D{-1, 1, 1}.validate()), Error);
  EXPECT_THROW((Mixture1D{1, 1, 1}.validate()), Error);
  EXPECT_NO_THROW((Mixture1D{1, -1, 1}.validate()));
}

TEST(MixtureHD, Validation) {
  EXPECT_THROW((MixtureHD{10, 1, 3.0, 0.3}.validate()), Error);
  EXPECT_THROW((MixtureHD{10, 1, 4.0, 0.6}.validate()), Error);
  EXPECT_THROW((MixtureHD{0, 1, 4.0, 0.3}.validate()), Error);
  EXPECT_NO_THROW((MixtureHD{10, 1, 4.0, 0.5}.validate()));
}

TEST(SampleMixture1D, TinyVarianceGivesMeans) {
  const auto d = sample_mixture_1d({1, -1, 1e-300}, 3, 2, 7);
  ASSERT_EQ(d.size(), 5);
  const double expected[] = {1, 1, 1, -1, -1};
  for (Index i = 0; i < 5; ++i) EXPECT_EQ(d.features()(i, 0), expected[i]);
  EXPECT_EQ(d.labels()[0], kPositive);
  EXPECT_EQ(d.labels()[4], kNegative);
}

TEST(SampleMixture1D, PositiveMeanConverges) {
  const Index n = 1000000;
  const auto d = sample_mixture_1d({1, -1, 1}, n, n, 1);
  const double pos_mean = d.features().col(0).head(n).mean();
  const double neg_mean = d.features().col(0).tail(n).mean();
  EXPECT_NEAR(pos_mean, 1.0, 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(neg_mean, -1.0, 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(SampleMixture1D, Deterministic) {
  EXPECT_EQ(sample_mixture_1d({}, 50, 40, 3), sample_mixture_1d({}, 50, 40, 3));
  EXPECT_FALSE(sample_mixture_1d({}, 50, 40, 3) == sample_mixture_1d({}, 50, 40, 4));
}

TEST(BayesThreshold, Midpoints) {
  EXPECT_DOUBLE_EQ(bayes_threshold({1, -1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(bayes_threshold({3, 1, 1}), 2.0);
  EXPECT_DOUBLE_EQ(bayes_threshold({0.7, -0.2, 1}), 0.25);
  EXPECT_EQ(bayes_classify({3, 1, 1}, 2.0), kPositive);
  EXPECT_EQ(bayes_classify({3, 1, 1}, 1.9), kNegative);
}

TEST(BayesThreshold, StrictlyBetweenMeansProperty) {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double mu2 = rng.uniform(-100, 100);
    const double mu1 = mu2 + rng.uniform(1e-6, 50);
    const double t = bayes_threshold({mu1, mu2, rng.uniform(0.1, 5)});
    ASSERT_GT(t, mu2);
    ASSERT_LT(t, mu1);
  }
}

TEST(SampleMixtureHD, SingleNegativeRow) {
  const auto d = sample_mixture_hd({2, 1, 4, 0.5}, 0, 1, 5);
  ASSERT_EQ(d.size(), 1);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_EQ(d.labels()[0], kNegative);
}

TEST(SampleMixtureHD, NegativeNormMatchesChiSquareMean) {
  const auto d = sample_mixture_hd({100, 1, 4, 0.5}, 0, 100000, 2);
  const double mean_sq = d.features().rowwise().squaredNorm().mean() / 100.0;
  EXPECT_NEAR(mean_sq, 4.0, 0.05);
}

TEST(SampleMixtureHD, Deterministic) {
  const MixtureHD spec{5, 1, 4, 0.3};
  EXPECT_EQ(sample_mixture_hd(spec, 3, 4, 9), sample_mixture_hd(spec, 3, 4, 9));
}

TEST(NormalCdf, Symmetry) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  for (double x = -8; x <= 8; x += 0.01) {
    ASSERT_NEAR(normal_cdf(x) + normal_cdf(-x), 1.0, 1e-12) << x;
  }
}

TEST(NormalCdf, Monotone) {
  double prev = 0.0;
  for (double x = -10; x <= 10; x += 0.001) {
    const double v = normal_cdf(x);
    ASSERT_GE(v, prev) << x;
    prev = v;
  }
}

TEST(NormalCdf, MatchesSeriesOracle) {
  EXPECT_NEAR(oracle::phi(1.96), 0.9750021048517795, 1e-15);
  EXPECT_NEAR(normal_cdf(1.96), oracle::phi(1.96), 1e-14);
  for (double x = -12; x <= 12; x += 0.37) {
    const double ref = oracle::phi(x);
    ASSERT_NEAR(normal_cdf(x), ref, 1e-13 + 1e-12 * ref) << x;
  }
}

TEST(LinearError, Limits) {
  EXPECT_NEAR(linear_error_standardized(0.3, 4, 1e-12), 0.5, 1e-12);
  EXPECT_NEAR(linear_error_standardized(0.3, 4, 60.0), 0.7, 1e-12);
  EXPECT_THROW(linear_error_standardized(0.3, 4, 0.0), Error);
  EXPECT_THROW(linear_error_closed_form({4, 1, 4, 0.3}, 1.0, -1.0), Error);
}

TEST(LinearError, KnownValue) {
  const double expected = 0.3 * oracle::phi(-1) + 0.7 * oracle::phi(0.5);
  EXPECT_NEAR(expected, 0.53162, 1e-5);
  EXPECT_NEAR(linear_error_standardized(0.3, 4, 1.0), expected, 1e-14);
  // sigma1 = 2, |theta| = 3, b = 6 is the same standardized margin.
  EXPECT_NEAR(linear_error_closed_form({7, 4, 4, 0.3}, 3.0, 6.0), expected, 1e-14);
}

TEST(LinearError, QuarterFloorProperty) {
  Rng rng(23);
  for (int i = 0; i < 20000; ++i) {
    MixtureHD spec;
    spec.dim = 1 + static_cast<int>(rng.below(200));
    spec.sigma1_sq = rng.uniform(0.01, 10);
    spec.beta = 3.0 + rng.uniform(1e-9, 50);
    spec.p_plus = 0.5 * (1.0 - rng.uniform());
    const double theta_norm = rng.uniform(1e-3, 100);
    const double b = std::exp(rng.uniform(-10, 5));
    const double err = linear_error_closed_form(spec, theta_norm, b);
    ASSERT_GE(err, 0.25) << spec.p_plus << " " << spec.beta << " " << b;
    ASSERT_NEAR(err, oracle::linear_error(spec.p_plus, spec.beta, b / (theta_norm * spec.sigma1())), 1e-12);
  }
}

TEST(LinearError, MonteCarloAgreement) {
  const MixtureHD spec{6, 2.0, 5.0, 0.35};
  VectorXr theta(6);
  theta << 0.3, -1.0, 0.2, 0.9, -0.4, 0.1;
  const double b = 1.7;
  const double closed = linear_error_closed_form(spec, theta.norm(), b);
  const Index n = 1000000;
  const auto mc = linear_monte_carlo_error(spec, theta, b, n, 99);
  EXPECT_NEAR(mc.estimate, closed, 3.0 * std::sqrt(closed * (1 - closed) / n));
  EXPECT_NEAR(mc.stderr_, std::sqrt(mc.estimate * (1 - mc.estimate) / n), 1e-15);
}
