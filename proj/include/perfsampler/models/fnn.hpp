#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "perfsampler/models/regression_tree.hpp"
#include "perfsampler/random.hpp"

namespace perfsampler::models {

struct FnnParams {
  std::vector<int> hidden{64, 64};
  std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1};
  std::optional<double> lambda;  // skips the grid search when set
  double learning_rate = 1e-2;
  int epochs = 2000;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;

  static FnnParams from_json(const Json& j) {
    FnnParams p;
    if (j.contains("hidden")) p.hidden = j["hidden"].get<std::vector<int>>();
    if (j.contains("lambda_grid")) p.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    if (j.contains("lambda")) p.lambda = j["lambda"].get<double>();
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.epochs = j.value("epochs", p.epochs);
    p.seed = j.value("seed", p.seed);
    p.validation_fraction = j.value("validation_fraction", p.validation_fraction);
    return p;
  }
};

/// Fully connected ReLU network with an identity output unit. Samples are
/// stored column-wise.
struct Network {
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;

  static Network init(const std::vector<int>& sizes, std::uint64_t seed) {
    Network net;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
      Eigen::MatrixXd W(sizes[l + 1], sizes[l]);
      for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
      Eigen::VectorXd b(sizes[l + 1]);
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = (2.0 * rng.uniform() - 1.0) * bound;
      net.weights.push_back(std::move(W));
      net.biases.push_back(std::move(b));
    }
    return net;
  }

  Eigen::RowVectorXd forward(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      Eigen::MatrixXd z = (weights[l] * a).colwise() + biases[l];
      a = (l + 1 < weights.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a.row(0);
  }

  double l1_norm() const {
    double s = 0.0;
    for (const auto& W : weights) s += W.cwiseAbs().sum();
    return s;
  }
};

/// Mean squared error plus lambda * sum |w| (biases unpenalized). When `grad`
/// is given it receives the gradient, with sign(0) = 0 for the L1 term.
inline double loss_and_gradient(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
                                double lambda, Network* grad) {
  const std::size_t L = net.weights.size();
  const double n = static_cast<double>(inputs.cols());
  std::vector<Eigen::MatrixXd> acts{inputs};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = (net.weights[l] * acts.back()).colwise() + net.biases[l];
    pre.push_back(z);
    acts.push_back(l + 1 < L ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
  }
  const Eigen::RowVectorXd err = acts.back().row(0) - targets;
  const double loss = err.squaredNorm() / n + lambda * net.l1_norm();
  if (grad) {
    grad->weights.resize(L);
    grad->biases.resize(L);
    Eigen::MatrixXd delta = (2.0 / n) * err;
    for (std::size_t l = L; l-- > 0;) {
      grad->weights[l] = delta * acts[l].transpose() + lambda * net.weights[l].unaryExpr([](double w) {
        return static_cast<double>((w > 0.0) - (w < 0.0));
      });
      grad->biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd back = net.weights[l].transpose() * delta;
        delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
      }
    }
  }
  return loss;
}

/// Proximal gradient descent: a plain gradient step on the squared error
/// followed by soft-thresholding of the weights for the L1 term.
inline std::vector<double> train_network(Network& net, const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
                                         double lambda, double learning_rate, int epochs) {
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(epochs));
  Network grad;
  const double shrink = learning_rate * lambda;
  for (int e = 0; e < epochs; ++e) {
    const double mse = loss_and_gradient(net, inputs, targets, 0.0, &grad);
    history.push_back(lambda > 0.0 ? mse + lambda * net.l1_norm() : mse);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      net.weights[l] -= learning_rate * grad.weights[l];
      net.biases[l] -= learning_rate * grad.biases[l];
      if (shrink > 0.0) {
        net.weights[l] = net.weights[l].unaryExpr([shrink](double w) {
          return w > shrink ? w - shrink : (w < -shrink ? w + shrink : 0.0);
        });
      }
    }
  }
  return history;
}

class FnnModel {
 public:
  const Network& network() const { return net_; }
  double lambda() const { return lambda_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  std::size_t n_features() const { return static_cast<std::size_t>(in_mean_.size()); }

  std::vector<double> predict(const FeatureMatrix& X) const {
    if (X.rows() == 0) return {};
    if (static_cast<std::size_t>(X.cols()) != n_features()) throw Error(Errc::dimension_mismatch, "feature dimension mismatch");
    const Eigen::MatrixXd inputs = standardize(X);
    const Eigen::RowVectorXd out = net_.forward(inputs);
    std::vector<double> pred(static_cast<std::size_t>(out.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) pred[i] = out[i] * y_scale_ + y_mean_;
    return pred;
  }

  Json to_json() const {
    Json j;
    j["type"] = "fnn";
    j["lambda"] = lambda_;
    j["input_mean"] = std::vector<double>(in_mean_.data(), in_mean_.data() + in_mean_.size());
    j["input_scale"] = std::vector<double>(in_scale_.data(), in_scale_.data() + in_scale_.size());
    j["target_mean"] = y_mean_;
    j["target_scale"] = y_scale_;
    j["layers"] = Json::array();
    for (std::size_t l = 0; l < net_.weights.size(); ++l) {
      const auto& W = net_.weights[l];
      Json lj;
      lj["rows"] = W.rows();
      lj["cols"] = W.cols();
      std::vector<double> w(static_cast<std::size_t>(W.size()));
      for (Eigen::Index r = 0; r < W.rows(); ++r)
        for (Eigen::Index c = 0; c < W.cols(); ++c) w[r * W.cols() + c] = W(r, c);
      lj["weights"] = w;
      lj["biases"] = std::vector<double>(net_.biases[l].data(), net_.biases[l].data() + net_.biases[l].size());
      j["layers"].push_back(std::move(lj));
    }
    return j;
  }

  static FnnModel from_json(const Json& j) {
    FnnModel m;
    m.lambda_ = j.at("lambda").get<double>();
    auto mean = j.at("input_mean").get<std::vector<double>>();
    auto scale = j.at("input_scale").get<std::vector<double>>();
    m.in_mean_ = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.in_scale_ = Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    m.y_mean_ = j.at("target_mean").get<double>();
    m.y_scale_ = j.at("target_scale").get<double>();
    for (const auto& lj : j.at("layers")) {
      const auto rows = lj.at("rows").get<Eigen::Index>();
      const auto cols = lj.at("cols").get<Eigen::Index>();
      auto w = lj.at("weights").get<std::vector<double>>();
      auto b = lj.at("biases").get<std::vector<double>>();
      Eigen::MatrixXd W(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      m.net_.weights.push_back(std::move(W));
      m.net_.biases.push_back(Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
    }
    return m;
  }

  friend FnnModel train_fnn(const FeatureMatrix& X, std::span<const double> y, const FnnParams& params);

 private:
  Eigen::MatrixXd standardize(const FeatureMatrix& X) const {
    Eigen::MatrixXd out(X.cols(), X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r)
      for (Eigen::Index c = 0; c < X.cols(); ++c) out(c, r) = (X(r, c) - in_mean_[c]) / in_scale_[c];
    return out;
  }

  Network net_;
  double lambda_ = 0.0;
  Eigen::VectorXd in_mean_;
  Eigen::VectorXd in_scale_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  std::vector<double> loss_history_;
};

namespace detail {

inline std::uint64_t row_hash(const FeatureMatrix& X, std::span<const double> y, Eigen::Index r, std::uint64_t seed) {
  std::uint64_t h = mix_seed(seed, 0x5eed);
  auto feed = [&h](double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix_seed(h ^ bits);
  };
  for (Eigen::Index c = 0; c < X.cols(); ++c) feed(X(r, c));
  feed(y[static_cast<std::size_t>(r)]);
  return h;
}

}  // namespace detail

/// Inputs and targets are standardized. Rows are put into a canonical
/// (content-determined) order first so the fit does not depend on the order
/// of the training set; the validation split is taken from that order too.
inline FnnModel train_fnn(const FeatureMatrix& X, std::span<const double> y, const FnnParams& params) {
  if (y.size() < 2 || static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(Errc::invalid_argument, "train_fnn needs |X| = |y| >= 2");
  }
  require_finite(X, y);
  if (params.epochs < 0 || !(params.learning_rate > 0.0)) throw Error(Errc::invalid_argument, "invalid FNN parameters");
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<std::uint64_t> hashes(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) hashes[r] = detail::row_hash(X, y, r, params.seed);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
    for (Eigen::Index c = 0; c < d; ++c) {
      if (X(a, c) != X(b, c)) return X(a, c) < X(b, c);
    }
    return y[a] < y[b];
  });

  FnnModel m;
  m.in_mean_ = X.colwise().mean().transpose();
  m.in_scale_.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double var = (X.col(c).array() - m.in_mean_[c]).square().mean();
    m.in_scale_[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  double ym = 0.0;
  for (double v : y) ym += v;
  ym /= static_cast<double>(n);
  double yv = 0.0;
  for (double v : y) yv += (v - ym) * (v - ym);
  yv /= static_cast<double>(n);
  m.y_mean_ = ym;
  m.y_scale_ = yv > 1e-24 ? std::sqrt(yv) : 1.0;

  Eigen::MatrixXd inputs(d, n);
  Eigen::RowVectorXd targets(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = order[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < d; ++c) inputs(c, i) = (X(r, c) - m.in_mean_[c]) / m.in_scale_[c];
    targets[i] = (y[static_cast<std::size_t>(r)] - ym) / m.y_scale_;
  }

  std::vector<int> sizes{static_cast<int>(d)};
  sizes.insert(sizes.end(), params.hidden.begin(), params.hidden.end());
  sizes.push_back(1);

  double lambda = params.lambda.value_or(params.lambda_grid.empty() ? 0.0 : params.lambda_grid.front());
  if (!params.lambda && params.lambda_grid.size() > 1) {
    const Eigen::Index n_val = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(params.validation_fraction * static_cast<double>(n))), 1, n - 1);
    const Eigen::Index n_fit = n - n_val;
    const Eigen::MatrixXd fit_in = inputs.leftCols(n_fit);
    const Eigen::RowVectorXd fit_y = targets.head(n_fit);
    const Eigen::MatrixXd val_in = inputs.rightCols(n_val);
    const Eigen::RowVectorXd val_y = targets.tail(n_val);
    double best = std::numeric_limits<double>::infinity();
    for (double lam : params.lambda_grid) {
      Network net = Network::init(sizes, params.seed);
      train_network(net, fit_in, fit_y, lam, params.learning_rate, params.epochs);
      const double val = (net.forward(val_in) - val_y).squaredNorm() / static_cast<double>(n_val);
      if (val < best) {
        best = val;
        lambda = lam;
      }
    }
  }
  m.lambda_ = lambda;
  m.net_ = Network::init(sizes, params.seed);
  m.loss_history_ = train_network(m.net_, inputs, targets, lambda, params.learning_rate, params.epochs);
  return m;
}

}  // namespace perfsampler::models
