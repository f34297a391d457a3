#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "perfsampler/error.hpp"

namespace perfsampler::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw Error(Errc::invalid_argument, "mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Cliff's delta: (#{a_i > b_j} - #{a_i < b_j}) / (|a| |b|).
inline double cliffs_delta(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::invalid_argument, "cliffs_delta needs two non-empty samples");
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sb.begin(), sb.end());
  long long score = 0;
  for (double x : a) {
    const auto below = std::lower_bound(sb.begin(), sb.end(), x) - sb.begin();
    const auto above = sb.end() - std::upper_bound(sb.begin(), sb.end(), x);
    score += below - above;
  }
  return static_cast<double>(score) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

inline constexpr double kMediumEffect = 0.33;
inline constexpr double kLargeEffect = 0.474;

/// Effect-size marker: "L" for large, "M" for medium, empty otherwise.
inline const char* effect_marker(double delta, double large = kLargeEffect) {
  const double d = std::abs(delta);
  if (d >= large) return "L";
  if (d >= kMediumEffect) return "M";
  return "";
}

/// Midranks (1-based) of `values`.
inline std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return values[x] < values[y]; });
  std::vector<double> rank(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
    i = j + 1;
  }
  return rank;
}

inline constexpr std::size_t kExactWilcoxonLimit = 12;

/// Two-sided p-value of the Wilcoxon signed-rank test on paired samples.
/// Zero differences are dropped. Up to 12 non-zero pairs the null
/// distribution of W+ is enumerated exactly (midranks handled by working on
/// doubled ranks); beyond that the normal approximation with tie correction
/// is used. Returns 1 when every difference is zero.
inline double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::dimension_mismatch, "wilcoxon needs paired samples of equal length");
  if (a.empty()) throw Error(Errc::invalid_argument, "wilcoxon needs at least one pair");
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diff.push_back(d);
  }
  const std::size_t n = diff.size();
  if (n == 0) return 1.0;
  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(diff[i]);
  const auto ranks = midranks(mags);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diff[i] > 0) w_plus += ranks[i];
  }

  if (n <= kExactWilcoxonLimit) {
    std::vector<int> r2(n);
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      total += r2[i];
    }
    // count[s] = number of sign assignments whose doubled W+ equals s
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    for (int r : r2) {
      for (int s = total; s >= r; --s) count[s] += count[s - r];
    }
    const int w2 = static_cast<int>(std::lround(2.0 * w_plus));
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total; ++s) {
      if (s <= w2) lower += count[s];
      if (s >= w2) upper += count[s];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
  }

  const double nn = static_cast<double>(n);
  double tie = 0.0;
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie += t * t * t - t;
    i = j + 1;
  }
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = (w_plus - mu) / std::sqrt(var);
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

}  // namespace perfsampler::stats
