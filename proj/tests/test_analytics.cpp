#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lexicost/analytics.hpp"
#include "support/reference_accuracies.hpp"
#include "support/stats_oracle.hpp"

using namespace lexicost;

namespace {

std::vector<double> row(std::size_t f) {
  return {reference::kAccuracy[f].begin(), reference::kAccuracy[f].end()};
}

std::vector<std::vector<double>> matrix() {
  std::vector<std::vector<double>> m;
  for (std::size_t f = 0; f < reference::kCostFns; ++f) m.push_back(row(f));
  return m;
}

MetricReport with_accuracy(double a) {
  MetricReport r;
  r.accuracy = a;
  return r;
}

}  // namespace

TEST(Metrics, PerfectPrediction) {
  auto m = metrics({5, 0, 5, 0});
  EXPECT_DOUBLE_EQ(m.accuracy, 100);
  EXPECT_DOUBLE_EQ(m.balanced_accuracy, 100);
  EXPECT_DOUBLE_EQ(m.precision, 100);
  EXPECT_DOUBLE_EQ(m.recall, 100);
  EXPECT_FALSE(m.precision_undefined || m.balanced_degenerate || m.recall_undefined);
}

TEST(Metrics, EmptyHypothesis) {
  auto m = metrics({0, 0, 10, 10});
  EXPECT_DOUBLE_EQ(m.accuracy, 50);
  EXPECT_DOUBLE_EQ(m.balanced_accuracy, 50);
  EXPECT_DOUBLE_EQ(m.recall, 0);
  EXPECT_DOUBLE_EQ(m.precision, 0);
  EXPECT_TRUE(m.precision_undefined);
  EXPECT_FALSE(m.balanced_degenerate);
}

TEST(Metrics, StandardFormulasWithOneNegative) {
  auto m = metrics({3, 1, 0, 1});
  EXPECT_DOUBLE_EQ(m.accuracy, 60);
  EXPECT_DOUBLE_EQ(m.balanced_accuracy, 37.5);
  EXPECT_DOUBLE_EQ(m.precision, 75);
  EXPECT_DOUBLE_EQ(m.recall, 75);
  EXPECT_FALSE(m.balanced_degenerate);
}

TEST(Metrics, AbsentClass) {
  auto no_neg = metrics({3, 0, 0, 1});
  EXPECT_TRUE(no_neg.balanced_degenerate);
  EXPECT_DOUBLE_EQ(no_neg.balanced_accuracy, 75);
  auto no_pos = metrics({0, 1, 3, 0});
  EXPECT_TRUE(no_pos.balanced_degenerate);
  EXPECT_TRUE(no_pos.recall_undefined);
  EXPECT_DOUBLE_EQ(no_pos.balanced_accuracy, 75);
}

TEST(Metrics, EmptyConfusion) {
  try {
    metrics({0, 0, 0, 0});
    FAIL();
  } catch (const StatsError& e) {
    EXPECT_EQ(e.kind(), StatsErrorKind::empty_confusion);
  }
}

TEST(Metrics, RangeAndBalancedIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    std::size_t p = rng() % 8, n = rng() % 8;
    if (p + n == 0) continue;
    std::size_t tp = p ? rng() % (p + 1) : 0, fp = n ? rng() % (n + 1) : 0;
    auto m = metrics({tp, fp, n - fp, p - tp});
    for (double v : {m.accuracy, m.balanced_accuracy, m.precision, m.recall}) {
      EXPECT_GE(v, 0);
      EXPECT_LE(v, 100);
    }
    if (p == n) {
      EXPECT_NEAR(m.accuracy, m.balanced_accuracy, 1e-9);
    }
    EXPECT_EQ(m.precision_undefined, tp + fp == 0);
    EXPECT_EQ(m.balanced_degenerate, p == 0 || n == 0);
  }
}

TEST(Aggregate, Examples) {
  std::vector<MetricReport> same(3, with_accuracy(80));
  auto a = aggregate_domain(same, "d");
  EXPECT_DOUBLE_EQ(a.accuracy.mean, 80);
  EXPECT_DOUBLE_EQ(a.accuracy.std_error, 0);
  std::vector<MetricReport> r = {with_accuracy(1), with_accuracy(2), with_accuracy(3)};
  auto b = aggregate_domain(r, "d");
  EXPECT_DOUBLE_EQ(b.accuracy.mean, 2);
  EXPECT_NEAR(b.accuracy.std_error, 0.5774, 5e-5);
  EXPECT_EQ(b.domain, "d");
  EXPECT_EQ(b.per_task.size(), 3u);
  EXPECT_THROW(aggregate_domain({}, "d"), StatsError);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 rng(8);
  std::vector<MetricReport> r;
  for (int i = 0; i < 9; ++i) r.push_back(with_accuracy(static_cast<double>(rng() % 10000) / 100));
  auto a = aggregate_domain(r, "d");
  std::shuffle(r.begin(), r.end(), rng);
  auto b = aggregate_domain(r, "d");
  EXPECT_NEAR(a.accuracy.mean, b.accuracy.mean, 1e-12);
  EXPECT_NEAR(a.accuracy.std_error, b.accuracy.std_error, 1e-12);
}

TEST(Reference, OverallMeans) {
  const double published[] = {87.588, 87.394, 82.508, 81.847, 81.691, 80.800, 79.631};
  for (std::size_t f = 0; f < reference::kCostFns; ++f) {
    std::vector<MetricReport> r;
    for (double v : row(f)) r.push_back(with_accuracy(v));
    EXPECT_NEAR(aggregate_domain(r, "all").accuracy.mean, published[f], 1e-3) << reference::kNames[f];
  }
}

TEST(Reference, RankOneCounts) {
  const std::size_t published[] = {7, 15, 10, 8, 4, 3, 5};
  for (auto rule : {TieRule::dense, TieRule::standard}) {
    auto r = rank_table(matrix(), 6, rule);
    for (std::size_t f = 0; f < reference::kCostFns; ++f) EXPECT_EQ(r.rank1[f], published[f]);
    EXPECT_GE(std::accumulate(r.rank1.begin(), r.rank1.end(), std::size_t{0}), reference::kDomains);
  }
}

TEST(Reference, StandardRuleMatchesLowerRanks) {
  auto r = rank_table(matrix(), 6, TieRule::standard);
  for (std::size_t f = 0; f < reference::kCostFns; ++f) {
    EXPECT_EQ(r.rank2[f], reference::kRank2[f]) << reference::kNames[f];
    EXPECT_EQ(r.rank3[f], reference::kRank3[f]) << reference::kNames[f];
  }
}

TEST(Reference, CorrelationMatrix) {
  for (std::size_t a = 0; a < reference::kCostFns; ++a)
    for (std::size_t b = 0; b < reference::kCostFns; ++b)
      EXPECT_NEAR(pearson(row(a), row(b)), reference::kPearson[a][b], 5e-5)
          << reference::kNames[a] << "/" << reference::kNames[b];
  EXPECT_GE(pearson(row(0), row(1)), 0.99);
  EXPECT_LE(pearson(row(2), row(6)), 0.60);
}

TEST(Pearson, Examples) {
  std::vector<double> x = {1, 2, 4, 7, 11};
  std::vector<double> lin, neg;
  for (double v : x) {
    lin.push_back(2 * v + 1);
    neg.push_back(-v);
  }
  EXPECT_NEAR(pearson(x, lin), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-12);
  std::vector<double> flat(5, 3.0);
  EXPECT_THROW(pearson(x, flat), StatsError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{2}), StatsError);
  EXPECT_THROW(pearson(x, std::vector<double>{1, 2}), LengthMismatch);
}

TEST(Pearson, AffineInvariance) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 300; ++i) {
    std::size_t n = 2 + rng() % 30;
    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = u(rng);
      y[k] = 0.5 * x[k] + u(rng);
    }
    const double r = pearson(x, y);
    EXPECT_GE(r, -1.0);
    EXPECT_LE(r, 1.0);
    EXPECT_NEAR(pearson(y, x), r, 1e-12);
    const double a = 0.1 + std::abs(u(rng)), b = u(rng);
    std::vector<double> sx(n), nx(n);
    for (std::size_t k = 0; k < n; ++k) {
      sx[k] = a * x[k] + b;
      nx[k] = -x[k];
    }
    EXPECT_NEAR(pearson(sx, y), r, 1e-9);
    EXPECT_NEAR(pearson(x, sx), 1.0, 1e-9);
    EXPECT_NEAR(pearson(nx, y), -r, 1e-12);
  }
}

TEST(Wilcoxon, AllPositiveSix) {
  std::vector<double> x = {1, 2, 3, 4, 5, 6}, y(6, 0.0);
  auto w = wilcoxon_signed_rank(x, y);
  EXPECT_NEAR(w.p_value, 0.03125, 1e-12);
  EXPECT_TRUE(w.exact);
  EXPECT_EQ(w.n, 6u);
  EXPECT_DOUBLE_EQ(w.w_plus, 21);
}

TEST(Wilcoxon, TooFewPairs) {
  std::vector<double> x = {1, 2, 3, 4, 5, 6};
  try {
    wilcoxon_signed_rank(x, x);
    FAIL();
  } catch (const StatsError& e) {
    EXPECT_EQ(e.kind(), StatsErrorKind::too_few_pairs);
  }
  std::vector<double> y = {1, 2, 3, 4, 0, 0};
  EXPECT_THROW(wilcoxon_signed_rank(x, y), StatsError);
  EXPECT_THROW(wilcoxon_signed_rank(x, std::vector<double>{1}), LengthMismatch);
}

TEST(Wilcoxon, ExactMatchesBruteForce) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 400; ++i) {
    std::size_t n = 5 + rng() % 8;
    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      // small integers so that ties and zero differences are common
      x[k] = static_cast<double>(rng() % 7);
      y[k] = static_cast<double>(rng() % 7);
    }
    double expected;
    try {
      auto w = wilcoxon_signed_rank(x, y);
      expected = stats_oracle::wilcoxon_brute_force(x, y);
      ASSERT_TRUE(w.exact);
      ASSERT_NEAR(w.p_value, expected, 1e-12);
      EXPECT_NEAR(wilcoxon_signed_rank(y, x).p_value, w.p_value, 1e-12);
    } catch (const StatsError&) {
      std::size_t nonzero = 0;
      for (std::size_t k = 0; k < n; ++k) nonzero += x[k] != y[k];
      EXPECT_LT(nonzero, kWilcoxonMinPairs);
    }
  }
}

TEST(Wilcoxon, NormalApproximationAboveTwentyFive) {
  std::vector<double> x(30), y(30, 0.0);
  for (std::size_t k = 0; k < 30; ++k) x[k] = static_cast<double>(k + 1);
  auto w = wilcoxon_signed_rank(x, y);
  EXPECT_FALSE(w.exact);
  const double mean = 30.0 * 31 / 4, var = 30.0 * 31 * 61 / 24;
  EXPECT_NEAR(w.p_value, std::erfc((465 - mean) / std::sqrt(var) / std::sqrt(2.0)), 1e-12);

  // Tie correction: 26 differences, two groups of 13 tied magnitudes.
  std::vector<double> a(26), b(26, 0.0);
  for (std::size_t k = 0; k < 26; ++k) a[k] = k < 13 ? (k % 2 ? 1.0 : -1.0) : 2.0;
  auto t = wilcoxon_signed_rank(a, b);
  double wplus = 0;
  for (std::size_t k = 0; k < 26; ++k)
    if (a[k] > 0) wplus += k < 13 ? 7.0 : 20.0;
  const double m2 = 26.0 * 27 / 4;
  const double v2 = 26.0 * 27 * 53 / 24 - 2 * (13.0 * 13 * 13 - 13) / 48;
  EXPECT_DOUBLE_EQ(t.w_plus, wplus);
  EXPECT_NEAR(t.p_value, std::erfc(std::abs(wplus - m2) / std::sqrt(v2) / std::sqrt(2.0)), 1e-12);
}

TEST(Wilcoxon, ExactAndNormalAgreeRoughlyAtBoundary) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.3, 1.0);
  std::vector<double> x(25), y(25, 0.0);
  for (auto& v : x) v = g(rng);
  auto exact = wilcoxon_signed_rank(x, y);
  x.push_back(0.01);
  y.push_back(0.0);
  auto approx = wilcoxon_signed_rank(x, y);
  EXPECT_TRUE(exact.exact);
  EXPECT_FALSE(approx.exact);
  EXPECT_NEAR(exact.p_value, approx.p_value, 0.05);
}

TEST(RankTable, Examples) {
  auto r = rank_table({{90}, {90}, {80}});
  EXPECT_EQ(r.rank1, (std::vector<std::size_t>{1, 1, 0}));
  EXPECT_EQ(r.rank2, (std::vector<std::size_t>{0, 0, 1}));
  auto s = rank_table({{90}, {90}, {80}}, 6, TieRule::standard);
  EXPECT_EQ(s.rank2, (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(s.rank3, (std::vector<std::size_t>{0, 0, 1}));
  auto all = rank_table({{5, 1}, {5, 1}, {5, 1}});
  EXPECT_EQ(all.rank1, (std::vector<std::size_t>{2, 2, 2}));
}

TEST(RankTable, RoundingMergesNoise) {
  auto r = rank_table({{90.0000001}, {90.0}});
  EXPECT_EQ(r.rank1, (std::vector<std::size_t>{1, 1}));
  auto strict = rank_table({{90.0000001}, {90.0}}, 9);
  EXPECT_EQ(strict.rank1, (std::vector<std::size_t>{1, 0}));
}

TEST(RankTable, IncompleteMatrix) {
  auto kind = [](auto&& fn) {
    try {
      fn();
    } catch (const StatsError& e) {
      return e.kind();
    }
    return StatsErrorKind::empty_input;
  };
  EXPECT_EQ(kind([] { rank_table({{1, 2}, {1}}); }), StatsErrorKind::incomplete_matrix);
  EXPECT_EQ(kind([] { rank_table({{1, NAN}, {1, 2}}); }), StatsErrorKind::incomplete_matrix);
  EXPECT_EQ(kind([] { rank_table({}); }), StatsErrorKind::incomplete_matrix);
}
