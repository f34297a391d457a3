#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"

namespace perfsampler::models {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void require_finite(const FeatureMatrix& X, std::span<const double> y) {
  if (!X.allFinite()) throw Error(Errc::non_finite_input, "feature matrix contains non-finite values");
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(Errc::non_finite_input, "targets contain non-finite values");
  }
}

struct TreeParams {
  int max_depth = 4;
  std::size_t min_leaf = 2;
};

/// CART regression tree with squared-error splits on axis-aligned thresholds.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  RegressionTree() = default;

  static RegressionTree fit(const FeatureMatrix& X, std::span<const double> y, const TreeParams& params) {
    return fit(X, y, params, all_rows(y.size()));
  }

  /// Fits on a multiset of row indices (bootstrap resamples repeat rows).
  static RegressionTree fit(const FeatureMatrix& X, std::span<const double> y, const TreeParams& params,
                            std::vector<std::size_t> rows) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error(Errc::dimension_mismatch, "|X| != |y|");
    if (rows.empty()) throw Error(Errc::invalid_argument, "cannot fit a tree on zero rows");
    RegressionTree t;
    t.n_features_ = static_cast<std::size_t>(X.cols());
    t.grow(X, y, params, rows, 0);
    return t;
  }

  double predict(std::span<const double> x) const {
    int n = 0;
    while (nodes_[n].feature >= 0) {
      n = x[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
    }
    return nodes_[n].value;
  }

  double predict_row(const FeatureMatrix& X, Eigen::Index r) const {
    int n = 0;
    while (nodes_[n].feature >= 0) {
      n = X(r, nodes_[n].feature) <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
    }
    return nodes_[n].value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }

  Json to_json() const { return node_json(0); }

  static RegressionTree from_json(const Json& j, std::size_t n_features) {
    RegressionTree t;
    t.n_features_ = n_features;
    t.read_node(j);
    return t;
  }

 private:
  static std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), std::size_t{0});
    return r;
  }

  int grow(const FeatureMatrix& X, std::span<const double> y, const TreeParams& p, std::vector<std::size_t>& rows,
           int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (auto r : rows) sum += y[r];
    const double n = static_cast<double>(rows.size());
    nodes_[id].value = sum / n;
    if (depth >= p.max_depth || rows.size() < 2 * std::max<std::size_t>(p.min_leaf, 1)) return id;

    double parent_sse = 0.0;
    for (auto r : rows) parent_sse += (y[r] - nodes_[id].value) * (y[r] - nodes_[id].value);
    if (parent_sse <= 1e-24) return id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 1e-12 * std::max(1.0, parent_sse);
    std::vector<std::size_t> sorted = rows;
    const std::size_t min_leaf = std::max<std::size_t>(p.min_leaf, 1);
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return X(a, f) < X(b, f); });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_sum += y[sorted[i]];
        const std::size_t nl = i + 1;
        const std::size_t nr = sorted.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double lo = X(sorted[i], f);
        const double hi = X(sorted[i + 1], f);
        if (!(lo < hi)) continue;
        const double right_sum = sum - left_sum;
        // SSE reduction = nl*ml^2 + nr*mr^2 - n*m^2
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto r : rows) (X(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const int l = grow(X, y, p, left_rows, depth + 1);
    const int r = grow(X, y, p, right_rows, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  Json node_json(int id) const {
    const auto& n = nodes_[id];
    if (n.feature < 0) return Json{{"leaf", n.value}};
    Json j;
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["value"] = n.value;
    j["left"] = node_json(n.left);
    j["right"] = node_json(n.right);
    return j;
  }

  int read_node(const Json& j) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (j.contains("leaf")) {
      nodes_[id].value = j["leaf"].get<double>();
      return id;
    }
    const int f = j.at("feature").get<int>();
    if (f < 0 || static_cast<std::size_t>(f) >= n_features_) {
      throw Error(Errc::dimension_mismatch, "split references feature " + std::to_string(f));
    }
    nodes_[id].feature = f;
    nodes_[id].threshold = j.at("threshold").get<double>();
    nodes_[id].value = j.value("value", 0.0);
    const int l = read_node(j.at("left"));
    const int r = read_node(j.at("right"));
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<Node> nodes_;
  std::size_t n_features_ = 0;
};

}  // namespace perfsampler::models
