#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/sampling/outcome.hpp"

namespace perfsampler::mobo {

using Point = std::vector<double>;

/// Minimization dominance: a <= b everywhere and a < b somewhere.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
  bool strictly = false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > b[j]) return false;
    if (a[j] < b[j]) strictly = true;
  }
  return strictly;
}

inline std::vector<Point> to_costs(const std::vector<Point>& points, std::span<const Direction> directions) {
  std::vector<Point> out = points;
  for (auto& p : out) {
    if (p.size() != directions.size()) throw Error(Errc::dimension_mismatch, "point/direction dimension mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (directions[j] == Direction::maximize) p[j] = -p[j];
    }
  }
  return out;
}

/// Fast non-dominated sorting of points already expressed as costs. Fronts
/// list indices in ascending order.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<Point>& costs) {
  const std::size_t n = costs.size();
  if (n == 0) return {};
  const std::size_t m = costs.front().size();
  for (const auto& p : costs) {
    if (p.size() != m) throw Error(Errc::dimension_mismatch, "points of unequal dimension");
  }
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> domination_count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(costs[i], costs[j])) {
        dominated_by_me[i].push_back(j);
        ++domination_count[j];
      } else if (dominates(costs[j], costs[i])) {
        dominated_by_me[j].push_back(i);
        ++domination_count[i];
      }
    }
  }
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    if (domination_count[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (auto i : current) {
      for (auto j : dominated_by_me[i]) {
        if (--domination_count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

inline std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<Point>& points,
                                                                std::span<const Direction> directions) {
  return non_dominated_sort(to_costs(points, directions));
}

/// Rank (0 = first front) of every point.
inline std::vector<std::size_t> front_ranks(const std::vector<std::vector<std::size_t>>& fronts, std::size_t n) {
  std::vector<std::size_t> rank(n, 0);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    for (auto i : fronts[r]) rank[i] = r;
  }
  return rank;
}

}  // namespace perfsampler::mobo
