#pragma once

// Correlation coefficients (Pearson's r, Spearman's rho, Kendall's tau-b)
// and score aggregation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "idiomforge/core.hpp"

namespace idiomforge::stats {

/// Raised when a coefficient has no value for the data (constant input,
/// all pairs tied) or the input is too short.
class UndefinedCorrelation : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline constexpr std::size_t kMinSamples = 3;

namespace detail {

inline void check_inputs(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw InvalidArgument("length mismatch (" + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  }
  if (xs.size() < kMinSamples) {
    throw UndefinedCorrelation("undefined correlation (need at least 3 samples)");
  }
}

}  // namespace detail

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  detail::check_inputs(xs, ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("undefined correlation (zero variance)");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based fractional ranks; ties share the mean of their positions.
inline std::vector<double> mid_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  detail::check_inputs(xs, ys);
  auto rx = mid_ranks(xs);
  auto ry = mid_ranks(ys);
  return pearson(rx, ry);
}

namespace detail {

inline std::uint64_t tied_pairs(std::span<const double> sorted) {
  std::uint64_t total = 0, run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

/// Sorts `v` ascending and returns the number of inversions removed.
inline std::uint64_t merge_sort_swaps(std::vector<double>& v, std::vector<double>& buf,
                                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_sort_swaps(v, buf, lo, mid) + merge_sort_swaps(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace detail

/// Kendall's tau-b in O(n log n) (Knight's algorithm): sort by (x, y),
/// count ties, then count discordant pairs as merge-sort inversions of y.
inline double kendall_tau_b(std::span<const double> xs, std::span<const double> ys) {
  detail::check_inputs(xs, ys);
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] != xs[b] ? xs[a] < xs[b] : ys[a] < ys[b];
  });

  std::vector<double> sx(n), sy(n);
  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = xs[order[i]];
    sy[i] = ys[order[i]];
  }
  const std::uint64_t ties_x = detail::tied_pairs(sx);
  std::uint64_t ties_xy = 0;
  {
    std::uint64_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && sx[i] == sx[i - 1] && sy[i] == sy[i - 1]) {
        ++run;
      } else {
        ties_xy += run * (run - 1) / 2;
        run = 1;
      }
    }
  }
  std::vector<double> buf(n);
  const std::uint64_t swaps = detail::merge_sort_swaps(sy, buf, 0, n);
  const std::uint64_t ties_y = detail::tied_pairs(sy);

  const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double dx = n0 - static_cast<double>(ties_x);
  const double dy = n0 - static_cast<double>(ties_y);
  if (dx == 0.0 || dy == 0.0) {
    throw UndefinedCorrelation("undefined correlation (all pairs tied)");
  }
  // concordant - discordant = n0 - ties_x - ties_y + ties_xy - 2 * discordant
  const double numerator = n0 - static_cast<double>(ties_x) - static_cast<double>(ties_y) +
                           static_cast<double>(ties_xy) - 2.0 * static_cast<double>(swaps);
  return std::clamp(numerator / std::sqrt(dx * dy), -1.0, 1.0);
}

struct ScoreSummary {
  double mean = 0;
  std::size_t count = 0;
  std::array<std::size_t, 3> histogram{};  // points 1, 2, 3

  friend bool operator==(const ScoreSummary&, const ScoreSummary&) = default;
};

inline ScoreSummary aggregate(std::span<const RubricScore> scores) {
  if (scores.empty()) throw InvalidArgument("nothing to aggregate");
  ScoreSummary s;
  long long total = 0;
  for (const auto& score : scores) {
    total += score.value();
    ++s.histogram[static_cast<std::size_t>(score.value() - 1)];
  }
  s.count = scores.size();
  s.mean = static_cast<double>(total) / static_cast<double>(s.count);
  return s;
}

/// Judge scores of the records that have one.
inline ScoreSummary aggregate_judge(std::span<const EvalRecord> evals) {
  std::vector<RubricScore> scores;
  for (const auto& e : evals) {
    if (e.judge_score) scores.push_back(*e.judge_score);
  }
  return aggregate(scores);
}

}  // namespace idiomforge::stats
