#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "perfsampler/models/regression_tree.hpp"

namespace perfsampler::models {

struct GbtParams {
  int rounds = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
  std::size_t min_leaf = 2;

  static GbtParams from_json(const Json& j) {
    GbtParams p;
    p.rounds = j.value("rounds", p.rounds);
    p.max_depth = j.value("depth", p.max_depth);
    p.learning_rate = j.value("eta", p.learning_rate);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    return p;
  }
};

/// Squared-loss gradient boosting: prediction = base + eta * sum of tree outputs.
class GbtModel {
 public:
  double base_score() const { return base_; }
  double learning_rate() const { return eta_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }
  /// Training RMSE after each round.
  const std::vector<double>& training_rmse() const { return train_rmse_; }

  double predict(std::span<const double> x) const {
    if (x.size() != n_features_) throw Error(Errc::dimension_mismatch, "feature dimension mismatch");
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(x);
    return base_ + eta_ * s;
  }

  std::vector<double> predict(const FeatureMatrix& X) const {
    if (X.rows() > 0 && static_cast<std::size_t>(X.cols()) != n_features_) {
      throw Error(Errc::dimension_mismatch, "feature dimension mismatch");
    }
    std::vector<double> out(static_cast<std::size_t>(X.rows()), 0.0);
    for (const auto& t : trees_) {
      for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] += t.predict_row(X, r);
    }
    for (auto& v : out) v = base_ + eta_ * v;
    return out;
  }

  Json to_json() const {
    Json j;
    j["type"] = "gbt";
    j["n_features"] = n_features_;
    j["base_score"] = base_;
    j["learning_rate"] = eta_;
    j["trees"] = Json::array();
    for (const auto& t : trees_) j["trees"].push_back(t.to_json());
    return j;
  }

  static GbtModel from_json(const Json& j) {
    GbtModel m;
    m.n_features_ = j.at("n_features").get<std::size_t>();
    m.base_ = j.at("base_score").get<double>();
    m.eta_ = j.at("learning_rate").get<double>();
    for (const auto& t : j.at("trees")) m.trees_.push_back(RegressionTree::from_json(t, m.n_features_));
    return m;
  }

  friend GbtModel train_gbt(const FeatureMatrix& X, std::span<const double> y, const GbtParams& params);

 private:
  double base_ = 0.0;
  double eta_ = 0.1;
  std::size_t n_features_ = 0;
  std::vector<RegressionTree> trees_;
  std::vector<double> train_rmse_;
};

inline GbtModel train_gbt(const FeatureMatrix& X, std::span<const double> y, const GbtParams& params) {
  if (y.empty() || static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(Errc::invalid_argument, "train_gbt needs |X| = |y| >= 1");
  }
  if (params.rounds < 0 || params.max_depth < 0 || !(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw Error(Errc::invalid_argument, "invalid boosting parameters");
  }
  require_finite(X, y);
  GbtModel m;
  m.n_features_ = static_cast<std::size_t>(X.cols());
  m.eta_ = params.learning_rate;
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  m.base_ = mean / static_cast<double>(n);

  std::vector<double> fitted(n, m.base_);
  std::vector<double> residual(n);
  const TreeParams tp{params.max_depth, params.min_leaf};
  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    RegressionTree tree = RegressionTree::fit(X, residual, tp);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fitted[i] += m.eta_ * tree.predict_row(X, static_cast<Eigen::Index>(i));
      sse += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    }
    m.trees_.push_back(std::move(tree));
    m.train_rmse_.push_back(std::sqrt(sse / static_cast<double>(n)));
  }
  return m;
}

}  // namespace perfsampler::models
