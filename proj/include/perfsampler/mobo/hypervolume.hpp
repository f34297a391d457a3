#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "perfsampler/mobo/pareto.hpp"

namespace perfsampler::mobo {

namespace detail {

// Points that weakly dominate nothing else in the set and lie strictly inside
// the reference box; duplicates collapse to one.
inline std::vector<Point> relevant(std::vector<Point> pts, std::span<const double> ref) {
  std::erase_if(pts, [&](const Point& p) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!(p[j] < ref[j])) return true;
    }
    return false;
  });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<Point> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      dominated = j != i && dominates(pts[j], pts[i]);
    }
    if (!dominated) out.push_back(pts[i]);
  }
  return out;
}

inline double box_volume(std::span<const double> p, std::span<const double> ref) {
  double v = 1.0;
  for (std::size_t j = 0; j < p.size(); ++j) v *= std::max(0.0, ref[j] - p[j]);
  return v;
}

inline double hv2d(std::vector<Point> pts, std::span<const double> ref) {
  std::sort(pts.begin(), pts.end());
  double hv = 0.0;
  double prev_y = ref[1];
  for (const auto& p : pts) {
    if (p[1] < prev_y) {
      hv += (ref[0] - p[0]) * (prev_y - p[1]);
      prev_y = p[1];
    }
  }
  return hv;
}

// WFG-style recursion: sum over points of their exclusive contribution with
// respect to the points after them.
inline double hv_recursive(std::vector<Point> pts, std::span<const double> ref) {
  pts = relevant(std::move(pts), ref);
  if (pts.empty()) return 0.0;
  if (ref.size() == 1) return ref[0] - pts.front()[0];
  if (ref.size() == 2) return hv2d(std::move(pts), ref);
  const std::size_t m = ref.size();
  std::sort(pts.begin(), pts.end(), [m](const Point& a, const Point& b) { return a[m - 1] < b[m - 1]; });
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<Point> limited;
    limited.reserve(pts.size() - i - 1);
    for (std::size_t k = i + 1; k < pts.size(); ++k) {
      Point q(m);
      for (std::size_t j = 0; j < m; ++j) q[j] = std::max(pts[i][j], pts[k][j]);
      limited.push_back(std::move(q));
    }
    total += box_volume(pts[i], ref) - hv_recursive(std::move(limited), ref);
  }
  return total;
}

}  // namespace detail

/// Measure of the region dominated by `points` (costs) and bounded by `ref`.
/// Every point must strictly dominate the reference point component-wise.
inline double hypervolume(const std::vector<Point>& points, std::span<const double> ref) {
  for (const auto& p : points) {
    if (p.size() != ref.size()) throw Error(Errc::dimension_mismatch, "point/reference dimension mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!(p[j] < ref[j])) throw Error(Errc::invalid_argument, "front point does not dominate the reference point");
    }
  }
  return detail::hv_recursive(points, ref);
}

/// Non-dominated cost vectors plus the reference point bounding them.
class ParetoFront {
 public:
  ParetoFront(std::vector<Point> points, Point reference) : points_(std::move(points)), ref_(std::move(reference)) {
    if (ref_.size() < 2 || ref_.size() > 4) throw Error(Errc::invalid_argument, "fronts must have 2 to 4 objectives");
    for (const auto& p : points_) {
      if (p.size() != ref_.size()) throw Error(Errc::dimension_mismatch, "point/reference dimension mismatch");
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (!(p[j] < ref_[j])) throw Error(Errc::invalid_argument, "front point does not dominate the reference point");
      }
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
      for (std::size_t k = 0; k < points_.size(); ++k) {
        if (i != k && dominates(points_[i], points_[k])) {
          throw Error(Errc::invalid_argument, "front points must be mutually non-dominated");
        }
      }
    }
    sorted_ = points_;
    std::sort(sorted_.begin(), sorted_.end());
  }

  /// Non-dominated subset of `costs`.
  static ParetoFront from_costs(const std::vector<Point>& costs, Point reference) {
    std::vector<Point> front;
    const auto fronts = non_dominated_sort(costs);
    if (!fronts.empty()) {
      for (auto i : fronts.front()) {
        if (std::find(front.begin(), front.end(), costs[i]) == front.end()) front.push_back(costs[i]);
      }
    }
    return ParetoFront(std::move(front), std::move(reference));
  }

  const std::vector<Point>& points() const { return points_; }
  const Point& reference() const { return ref_; }
  std::size_t dimension() const { return ref_.size(); }

  double volume() const { return detail::hv_recursive(points_, ref_); }

  /// HV(front + y) - HV(front). Zero when y is weakly dominated or outside the
  /// reference box.
  double improvement(std::span<const double> y) const {
    const std::size_t m = ref_.size();
    for (std::size_t j = 0; j < m; ++j) {
      if (!(y[j] < ref_[j])) return 0.0;
    }
    if (m == 2) return improvement2d(y[0], y[1]);
    std::vector<Point> limited;
    limited.reserve(points_.size());
    for (const auto& p : points_) {
      Point q(m);
      for (std::size_t j = 0; j < m; ++j) q[j] = std::max(p[j], y[j]);
      limited.push_back(std::move(q));
    }
    return detail::box_volume(y, ref_) - detail::hv_recursive(std::move(limited), ref_);
  }

 private:
  // Staircase integration: over x in [a, r0), the front leaves the band
  // below height h(x) = min{p1 : p0 <= x} undominated.
  double improvement2d(double a, double b) const {
    const double r0 = ref_[0];
    const double r1 = ref_[1];
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), a,
                               [](double v, const Point& p) { return v < p[0]; });
    double h = r1;
    for (auto p = sorted_.begin(); p != it; ++p) h = std::min(h, (*p)[1]);
    double area = 0.0;
    double x = a;
    while (x < r0 && h > b) {
      const double next_x = it == sorted_.end() ? r0 : std::min(r0, (*it)[0]);
      area += (next_x - x) * (h - b);
      x = next_x;
      if (it == sorted_.end()) break;
      h = std::min(h, (*it)[1]);
      ++it;
    }
    return area;
  }

  std::vector<Point> points_;
  Point ref_;
  std::vector<Point> sorted_;
};

inline double hypervolume(const ParetoFront& front) { return front.volume(); }

}  // namespace perfsampler::mobo
