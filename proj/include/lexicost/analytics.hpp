#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lexicost/errors.hpp"
#include "lexicost/evaluator.hpp"

namespace lexicost {

/// Percentages in [0, 100]. Flags record which degenerate-denominator
/// convention fired.
struct MetricReport {
  double accuracy = 0;
  double balanced_accuracy = 0;
  double precision = 0;
  double recall = 0;
  bool precision_undefined = false;  // tp + fp == 0, precision reported as 0
  bool balanced_degenerate = false;  // one class absent, the other's rate reported
  bool recall_undefined = false;     // tp + fn == 0, recall reported as 0
};

inline MetricReport metrics(const Confusion& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  const double total = tp + fp + tn + fn;
  if (total == 0) throw StatsError(StatsErrorKind::empty_confusion, "confusion has no examples");

  MetricReport r;
  r.accuracy = 100.0 * (tp + tn) / total;

  const bool has_pos = c.tp + c.fn > 0;
  const bool has_neg = c.tn + c.fp > 0;
  const double tpr = has_pos ? tp / (tp + fn) : 0.0;
  const double tnr = has_neg ? tn / (tn + fp) : 0.0;
  if (has_pos && has_neg) {
    r.balanced_accuracy = 50.0 * (tpr + tnr);
  } else {
    r.balanced_degenerate = true;
    r.balanced_accuracy = 100.0 * (has_pos ? tpr : tnr);
  }

  if (c.tp + c.fp == 0) {
    r.precision_undefined = true;
  } else {
    r.precision = 100.0 * tp / (tp + fp);
  }
  if (!has_pos) {
    r.recall_undefined = true;
  } else {
    r.recall = 100.0 * tpr;
  }
  return r;
}

struct MeanStderr {
  double mean = 0;
  double std_error = 0;  // sample standard deviation / sqrt(n); 0 when n == 1
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
  if (xs.empty()) throw StatsError(StatsErrorKind::empty_input, "no values to aggregate");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1)) / std::sqrt(n)};
}

struct DomainAggregate {
  std::string domain;
  std::vector<MetricReport> per_task;
  MeanStderr accuracy;
  MeanStderr balanced_accuracy;
  MeanStderr precision;
  MeanStderr recall;
};

inline DomainAggregate aggregate_domain(std::span<const MetricReport> reports, std::string domain) {
  if (reports.empty())
    throw StatsError(StatsErrorKind::empty_input, "domain '" + domain + "' has no results");
  DomainAggregate out{std::move(domain), {reports.begin(), reports.end()}, {}, {}, {}, {}};
  std::vector<double> v(reports.size());
  auto summarize = [&](double MetricReport::*field) {
    for (std::size_t i = 0; i < reports.size(); ++i) v[i] = reports[i].*field;
    return mean_stderr(v);
  };
  out.accuracy = summarize(&MetricReport::accuracy);
  out.balanced_accuracy = summarize(&MetricReport::balanced_accuracy);
  out.precision = summarize(&MetricReport::precision);
  out.recall = summarize(&MetricReport::recall);
  return out;
}

/// Sample Pearson correlation.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw LengthMismatch("pearson: inputs differ in length");
  if (xs.size() < 2)
    throw StatsError(StatsErrorKind::degenerate_input, "pearson: need at least two pairs");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0)
    throw StatsError(StatsErrorKind::degenerate_input, "pearson: an input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct WilcoxonResult {
  double p_value = 1;
  double w_plus = 0;   // sum of ranks of positive differences
  std::size_t n = 0;   // pairs left after dropping zero differences
  bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactMax = 25;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

namespace detail {

// Twice the average rank of each |d| (ties share the mean of their positions),
// which keeps every rank sum an integer.
inline std::vector<std::int64_t> doubled_ranks(const std::vector<double>& abs_diffs) {
  const std::size_t n = abs_diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
  std::vector<std::int64_t> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
    const auto doubled = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Two-sided Wilcoxon signed-rank test. Zero differences are dropped and tied
/// magnitudes get averaged ranks. Up to 25 remaining pairs the null
/// distribution of W+ is counted exactly over all 2^n sign patterns; beyond
/// that a normal approximation with tie-corrected variance is used.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw LengthMismatch("wilcoxon: inputs differ in length");
  std::vector<double> mags;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - ys[i];
    if (d == 0) continue;
    mags.push_back(std::abs(d));
    positive.push_back(d > 0);
  }
  const std::size_t n = mags.size();
  if (n < kWilcoxonMinPairs)
    throw StatsError(StatsErrorKind::too_few_pairs,
                     "wilcoxon: " + std::to_string(n) + " non-zero differences, need " +
                         std::to_string(kWilcoxonMinPairs));

  const auto ranks = detail::doubled_ranks(mags);
  std::int64_t w2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (positive[i]) w2 += ranks[i];

  WilcoxonResult res;
  res.n = n;
  res.w_plus = static_cast<double>(w2) / 2.0;

  if (n <= kWilcoxonExactMax) {
    const auto total = std::accumulate(ranks.begin(), ranks.end(), std::int64_t{0});
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1;
    std::int64_t reach = 0;
    for (auto r : ranks) {
      reach += r;
      for (std::int64_t s = reach; s >= r; --s) ways[s] += ways[s - r];
    }
    double below = 0, above = 0;
    for (std::int64_t s = 0; s <= total; ++s) {
      if (s <= w2) below += ways[s];
      if (s >= w2) above += ways[s];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    res.p_value = std::min(1.0, 2.0 * std::min(below, above) / all);
    res.exact = true;
    return res;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1) / 4.0;
  double var = nn * (nn + 1) * (2 * nn + 1) / 24.0;
  std::vector<std::int64_t> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    var -= (t * t * t - t) / 48.0;
    i = j;
  }
  const double z = (res.w_plus - mean) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return res;
}

enum class TieRule {
  dense,     // tied best → 1, next distinct value → 2, then 3
  standard,  // tied best → 1, next value ranks 1 + number of strictly better
};

struct RankCounts {
  std::vector<std::size_t> rank1;
  std::vector<std::size_t> rank2;
  std::vector<std::size_t> rank3;
};

/// Ranks rows (cost functions) within each column (domain), higher values
/// first, after rounding to `decimals` places, and tallies ranks 1-3.
inline RankCounts rank_table(const std::vector<std::vector<double>>& matrix, int decimals = 6,
                             TieRule rule = TieRule::dense) {
  if (matrix.empty() || matrix.front().empty())
    throw StatsError(StatsErrorKind::incomplete_matrix, "rank table needs at least one value");
  const std::size_t cols = matrix.front().size();
  for (const auto& row : matrix) {
    if (row.size() != cols)
      throw StatsError(StatsErrorKind::incomplete_matrix, "rank table rows differ in length");
    for (double v : row)
      if (!std::isfinite(v))
        throw StatsError(StatsErrorKind::incomplete_matrix, "rank table has a missing value");
  }

  const double scale = std::pow(10.0, decimals);
  RankCounts out{std::vector<std::size_t>(matrix.size(), 0), std::vector<std::size_t>(matrix.size(), 0),
                 std::vector<std::size_t>(matrix.size(), 0)};
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<std::int64_t> v(matrix.size());
    for (std::size_t r = 0; r < matrix.size(); ++r) v[r] = std::llround(matrix[r][c] * scale);
    std::vector<std::int64_t> distinct = v;
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      std::size_t rank;
      if (rule == TieRule::dense) {
        rank = 1 + static_cast<std::size_t>(
                       std::find(distinct.begin(), distinct.end(), v[r]) - distinct.begin());
      } else {
        rank = 1 + static_cast<std::size_t>(
                       std::count_if(v.begin(), v.end(), [&](std::int64_t x) { return x > v[r]; }));
      }
      if (rank == 1) ++out.rank1[r];
      if (rank == 2) ++out.rank2[r];
      if (rank == 3) ++out.rank3[r];
    }
  }
  return out;
}

}  // namespace lexicost
