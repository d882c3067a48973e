#include "imba/imbalance.hpp"
#include "imba/random.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace imba;

TEST(LongTailed, TableEndpoints) {
  const auto c = long_tailed_counts(10, 5000, 100);
  EXPECT_EQ(c.front(), 5000);
  EXPECT_EQ(c.back(), 50);
  const auto s = long_tailed_counts(10, 1000, 100);
  EXPECT_EQ(s.front(), 1000);
  EXPECT_EQ(s.back(), 10);
}

TEST(LongTailed, IntermediateCountsFollowGeometricDecay) {
  const auto c = long_tailed_counts(10, 5000, 100);
  for (int i = 0; i < 10; ++i) {
    const double exact = 5000.0 * std::exp(-std::log(100.0) * i / 9.0);
    EXPECT_EQ(c[static_cast<std::size_t>(i)], static_cast<Index>(std::llround(exact))) << i;
  }
  EXPECT_EQ(c, (std::vector<Index>{5000, 2997, 1797, 1077, 646, 387, 232, 139, 83, 50}));
}

TEST(LongTailed, UniformLimit) {
  for (Index v : long_tailed_counts(7, 321, 1.0)) EXPECT_EQ(v, 321);
}

TEST(LongTailed, RatioAndMonotoneProperty) {
  Rng rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const int classes = 2 + static_cast<int>(rng.below(30));
    const Index head = 50 + static_cast<Index>(rng.below(5000));
    const double rho = rng.uniform(1.0, static_cast<double>(head) / 5.0);
    const auto c = long_tailed_counts(classes, head, rho);
    ASSERT_EQ(c.front(), head);
    ASSERT_TRUE(std::is_sorted(c.rbegin(), c.rend()));
    const double tail = static_cast<double>(c.back());
    const double ratio = imbalance_ratio(c);
    ASSERT_GE(ratio, rho * (1 - 2 / tail) - 1e-12);
    ASSERT_LE(ratio, rho * (1 + 2 / tail) + 1e-12);
  }
}

TEST(LongTailed, RejectsZeroTail) {
  EXPECT_THROW(long_tailed_counts(10, 50, 200), Error);
  EXPECT_THROW(long_tailed_counts(1, 50, 2), Error);
  EXPECT_THROW(long_tailed_counts(10, 50, 0.5), Error);
}

TEST(Step, TableStructure) {
  const auto c = step_counts(10, 5000, 100);
  EXPECT_EQ(c, (std::vector<Index>{5000, 5000, 5000, 5000, 5000, 50, 50, 50, 50, 50}));
  EXPECT_EQ(step_counts(3, 100, 10), (std::vector<Index>{100, 100, 10}));
  for (Index v : step_counts(4, 9, 1.0)) EXPECT_EQ(v, 9);
}

TEST(Step, TwoDistinctValuesProperty) {
  for (int classes = 2; classes < 20; ++classes) {
    const auto c = step_counts(classes, 1000, 7.5);
    EXPECT_EQ(std::set<Index>(c.begin(), c.end()).size(), 2u);
  }
}

TEST(ImbalanceRatio, Examples) {
  EXPECT_DOUBLE_EQ(imbalance_ratio(std::vector<Index>(5, 7)), 1.0);
  EXPECT_DOUBLE_EQ(imbalance_ratio(long_tailed_counts(10, 5000, 100)), 100.0);
  EXPECT_DOUBLE_EQ(imbalance_ratio(std::vector<Index>{9, 3}), 3.0);
}

TEST(Profile, UniformRequiresUnitRatio) {
  ImbalanceProfile p{ImbalanceKind::Uniform, 4, 10, 2.0};
  EXPECT_THROW(p.counts(), Error);
  p.rho = 1.0;
  EXPECT_EQ(p.counts(), std::vector<Index>(4, 10));
}

TEST(Allocation, SumsExactlyAndMatchesOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const int classes = 2 + static_cast<int>(rng.below(15));
    const Index total = static_cast<Index>(rng.below(100000));
    const double rho = rng.uniform(1, 200);
    const auto c = long_tailed_allocation(classes, total, rho);
    ASSERT_EQ(std::accumulate(c.begin(), c.end(), Index{0}), total);
    std::vector<double> w;
    for (int i = 0; i < classes; ++i) w.push_back(std::pow(rho, -static_cast<double>(i) / (classes - 1)));
    const auto ref = oracle::proportional_split(w, total);
    for (int i = 0; i < classes; ++i) ASSERT_EQ(c[static_cast<std::size_t>(i)], ref[static_cast<std::size_t>(i)]);
  }
}

TEST(Allocation, DoublingRhoUShrinksTheTail) {
  // Fixed pool size: the tail count under rho_u = 2 rho against rho_u = rho is
  // the ratio of the two normalised profiles, not exactly one half.
  const Index total = 27500;
  const auto at_rho = long_tailed_allocation(10, total, 50);
  const auto at_2rho = long_tailed_allocation(10, total, 100);
  auto tail_share = [](double rho) {
    double norm = 0;
    for (int i = 0; i < 10; ++i) norm += std::pow(rho, -i / 9.0);
    return 1.0 / rho / norm;
  };
  EXPECT_NEAR(static_cast<double>(at_rho.back()), total * tail_share(50), 1.0);
  EXPECT_NEAR(static_cast<double>(at_2rho.back()), total * tail_share(100), 1.0);
  EXPECT_LT(at_2rho.back(), at_rho.back());
}

namespace {

BlobModel test_blobs(int classes = 3, Index dim = 4) {
  return BlobModel::random(classes, dim, 4.0, 1.0, 0.0, 77);
}

}  // namespace

TEST(Synthesize, CountsMatchProfile) {
  const auto blobs = test_blobs(10, 3);
  const ImbalanceProfile p{ImbalanceKind::LongTailed, 10, 1000, 100};
  const auto d = synthesize_labeled(p, blobs, 1);
  EXPECT_EQ(d.class_counts(), p.counts());
  EXPECT_FALSE(d.has_true_labels());
}

TEST(Synthesize, SeparableWithTinyVariance) {
  BlobModel m;
  m.means = MatrixXr(2, 2);
  m.means << 1, 0, -1, 0;
  m.stddev = 1e-6;
  m.scales = VectorXr::Ones(2);
  const auto d = synthesize_labeled({ImbalanceKind::Uniform, 2, 50, 1.0}, m, 3);
  for (Index i = 0; i < d.size(); ++i) {
    const int label = d.labels()[static_cast<std::size_t>(i)];
    ASSERT_EQ(d.features()(i, 0) > 0, label == 0);
  }
}

TEST(Synthesize, ClassMeansConverge) {
  const auto blobs = test_blobs();
  const std::vector<Index> counts{100000, 10, 10};
  const auto d = synthesize_from_counts(counts, blobs, 5);
  const RowVector<double> mean = d.features().topRows(100000).colwise().mean();
  for (Index j = 0; j < blobs.dim(); ++j) EXPECT_NEAR(mean(j), blobs.means(0, j), 4.0 / std::sqrt(1e5));
}

TEST(Synthesize, ScalesMultiplyDraws) {
  auto blobs = BlobModel::random(2, 3, 4.0, 1.0, 2.0, 9);
  const std::vector<Index> counts{50000, 1};
  const auto d = synthesize_from_counts(counts, blobs, 2);
  const RowVector<double> mean = d.features().topRows(50000).colwise().mean();
  for (Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(mean(j), blobs.scales(j) * blobs.means(0, j), 5.0 * blobs.scales(j) / std::sqrt(5e4));
  }
}

TEST(Irrelevant, DisplacedFromEveryClass) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto blobs = BlobModel::random(10, 16, 4.0, 1.5, 0.0, seed);
    const auto irr = IrrelevantModel::displaced_from(blobs, 5.0, seed + 100);
    for (int c = 0; c < 10; ++c) {
      ASSERT_GE((blobs.means.row(c).transpose() - irr.mean).norm(), 5.0 * 1.5);
    }
  }
}

TEST(Unlabeled, BalancedRelevantPool) {
  const auto blobs = test_blobs(10, 3);
  const auto labeled = synthesize_labeled({ImbalanceKind::LongTailed, 10, 500, 50}, blobs, 1);
  const auto irr = IrrelevantModel::displaced_from(blobs, 5, 2);
  const auto pool = synthesize_unlabeled(labeled, {5.0, 1.0, 1.0, 3}, blobs, irr);
  const Index size = std::llround(5.0 * labeled.size());
  ASSERT_EQ(pool.size(), size);
  std::vector<Index> counts(10, 0);
  for (int t : pool.true_labels()) {
    ASSERT_GE(t, 0);
    ++counts[static_cast<std::size_t>(t)];
  }
  for (Index c : counts) EXPECT_NEAR(static_cast<double>(c), size / 10.0, 1.0);
  for (int l : pool.labels()) ASSERT_EQ(l, kUnlabeled);
}

TEST(Unlabeled, ZeroRelevanceIsAllOutOfDistribution) {
  const auto blobs = test_blobs();
  const auto labeled = synthesize_labeled({ImbalanceKind::Uniform, 3, 20, 1.0}, blobs, 1);
  const auto pool = synthesize_unlabeled(labeled, {2.0, 1.0, 0.0, 3}, blobs,
                                         IrrelevantModel::displaced_from(blobs, 5, 2));
  EXPECT_EQ(pool.size(), 120);
  for (int t : pool.true_labels()) EXPECT_EQ(t, kOutOfDistribution);
}

TEST(Unlabeled, SizeAndSplitProperty) {
  Rng rng(12);
  const auto blobs = test_blobs(5, 2);
  const auto irr = IrrelevantModel::displaced_from(blobs, 5, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto labeled = synthesize_labeled({ImbalanceKind::LongTailed, 5, 40 + static_cast<Index>(rng.below(100)), 4}, blobs, trial);
    const UnlabeledPoolConfig cfg{rng.uniform(0.3, 4), rng.uniform(1, 30), rng.uniform(), sub_seed(trial, 1)};
    const auto pool = synthesize_unlabeled(labeled, cfg, blobs, irr);
    const Index size = std::llround(cfg.multiplier * labeled.size());
    ASSERT_EQ(pool.size(), size);
    const auto ood = std::count(pool.true_labels().begin(), pool.true_labels().end(), kOutOfDistribution);
    ASSERT_NEAR(static_cast<double>(size - ood), cfg.relevance * size, 1.0);
  }
}

TEST(Unlabeled, PoolRatioMatchesRhoU) {
  const auto blobs = test_blobs(10, 2);
  const auto labeled = synthesize_labeled({ImbalanceKind::LongTailed, 10, 500, 50}, blobs, 1);
  const auto pool = synthesize_unlabeled(labeled, {5.0, 50.0, 1.0, 4}, blobs,
                                         IrrelevantModel::displaced_from(blobs, 5, 2));
  std::vector<Index> counts(10, 0);
  for (int t : pool.true_labels()) ++counts[static_cast<std::size_t>(t)];
  EXPECT_NEAR(imbalance_ratio(counts), 50.0, 50.0 * 2.0 / static_cast<double>(counts.back()));
}

TEST(Subsample, Examples) {
  const auto blobs = BlobModel::random(2, 2, 4, 1, 0, 1);
  const auto d = synthesize_from_counts(std::vector<Index>{100, 10}, blobs, 3);
  EXPECT_EQ(subsample_labeled(d, 1.0, 5), d);
  EXPECT_EQ(subsample_labeled(d, 0.5, 5).class_counts(), (std::vector<Index>{50, 5}));
  const auto three_quarters = subsample_labeled(d, 0.75, 5).class_counts();
  EXPECT_EQ(three_quarters[0], std::llround(0.75 * 100));
  EXPECT_EQ(three_quarters[1], std::llround(0.75 * 10));
  EXPECT_THROW(subsample_labeled(d, 0.01, 5), Error);
}
