#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"

namespace perfsampler::mobo {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GpHyper {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;

  Json to_json() const {
    return Json{{"lengthscale", lengthscale}, {"signal_variance", signal_variance}, {"noise_variance", noise_variance}};
  }
};

/// Hyperparameter grid searched by the "auto" fit (log-spaced, 5x3x3).
inline std::vector<GpHyper> default_hyper_grid() {
  std::vector<GpHyper> grid;
  for (double l : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    for (double s : {0.3, 1.0, 3.0}) {
      for (double n : {1e-6, 1e-3, 1e-1}) grid.push_back({l, s, n});
    }
  }
  return grid;
}

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Squared-exponential kernel matrix between the rows of A and B.
inline Eigen::MatrixXd se_kernel(const Matrix& A, const Matrix& B, double lengthscale, double signal_variance) {
  const Eigen::VectorXd an = A.rowwise().squaredNorm();
  const Eigen::VectorXd bn = B.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * A * B.transpose()).eval();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  const double inv = -0.5 / (lengthscale * lengthscale);
  return (d2.cwiseMax(0.0) * inv).array().exp().matrix() * signal_variance;
}

/// Exact GP regression with a shared isotropic squared-exponential kernel.
/// Targets are standardized internally; predictions come back in the original
/// units. Immutable after construction.
class GpModel {
 public:
  const GpHyper& hyper() const { return hyper_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(X_.cols()); }
  const Matrix& inputs() const { return X_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }
  double log_marginal_likelihood() const { return lml_; }

  Prediction predict(std::span<const double> x) const {
    check_dimension(x.size());
    Matrix q = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    const auto p = predict_standardized(q);
    return {p.first[0] * y_scale_ + y_mean_, p.second[0] * y_scale_ * y_scale_};
  }

  /// Posterior mean and variance for every row of Q.
  std::pair<std::vector<double>, std::vector<double>> predict(const Matrix& Q) const {
    if (Q.rows() > 0) check_dimension(static_cast<std::size_t>(Q.cols()));
    auto [mu, var] = predict_standardized(Q);
    for (auto& m : mu) m = m * y_scale_ + y_mean_;
    for (auto& v : var) v *= y_scale_ * y_scale_;
    return {std::move(mu), std::move(var)};
  }

  /// Gradient of the posterior mean with respect to the query.
  std::vector<double> mean_gradient(std::span<const double> x) const {
    check_dimension(x.size());
    const double l2 = hyper_.lengthscale * hyper_.lengthscale;
    std::vector<double> g(x.size(), 0.0);
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - X_(i, static_cast<Eigen::Index>(j));
        d2 += d * d;
      }
      const double w = alpha_[i] * hyper_.signal_variance * std::exp(-0.5 * d2 / l2);
      for (std::size_t j = 0; j < x.size(); ++j) g[j] -= w * (x[j] - X_(i, static_cast<Eigen::Index>(j))) / l2;
    }
    for (auto& v : g) v *= y_scale_;
    return g;
  }

  /// Cross-covariance K(Q, X) under the fitted kernel.
  Eigen::MatrixXd cross_kernel(const Matrix& Q) const {
    return se_kernel(Q, X_, hyper_.lengthscale, hyper_.signal_variance);
  }

  /// (K + noise I)^-1 v for the training covariance.
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return chol_.solve(v); }

  /// Standardized targets used for fitting.
  const Eigen::VectorXd& standardized_targets() const { return y_std_; }

  friend GpModel gp_fit(const Matrix&, std::span<const double>, const GpHyper&);

 private:
  void check_dimension(std::size_t d) const {
    if (d != dimension()) throw Error(Errc::dimension_mismatch, "query dimension does not match training inputs");
  }

  std::pair<std::vector<double>, std::vector<double>> predict_standardized(const Matrix& Q) const {
    const Eigen::MatrixXd Ks = cross_kernel(Q);  // m x n
    const Eigen::VectorXd mu = Ks * alpha_;
    const Eigen::MatrixXd V = chol_.matrixL().solve(Ks.transpose());  // n x m
    std::vector<double> mean(static_cast<std::size_t>(Q.rows()));
    std::vector<double> var(static_cast<std::size_t>(Q.rows()));
    for (Eigen::Index r = 0; r < Q.rows(); ++r) {
      mean[r] = mu[r];
      var[r] = std::max(0.0, hyper_.signal_variance - V.col(r).squaredNorm());
    }
    return {std::move(mean), std::move(var)};
  }

  Matrix X_;
  Eigen::VectorXd y_std_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  GpHyper hyper_;
  double jitter_ = 0.0;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double lml_ = 0.0;
};

namespace detail {

// Cholesky of K + noise I, climbing the jitter ladder when needed.
inline std::optional<std::pair<Eigen::LLT<Eigen::MatrixXd>, double>> factorize(const Eigen::MatrixXd& K, double noise) {
  const Eigen::Index n = K.rows();
  double jitter = 0.0;
  for (int step = 0; step <= 7; ++step) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      return std::make_pair(std::move(llt), jitter);
    }
    jitter = step == 0 ? 1e-10 : jitter * 10.0;
  }
  (void)n;
  return std::nullopt;
}

}  // namespace detail

inline GpModel gp_fit(const Matrix& X, std::span<const double> y, const GpHyper& hyper) {
  if (X.rows() == 0 || static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(Errc::invalid_argument, "gp_fit needs |X| = |y| >= 1");
  }
  if (!X.allFinite()) throw Error(Errc::non_finite_input, "GP inputs contain non-finite values");
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(Errc::non_finite_input, "GP targets contain non-finite values");
  }
  if (!(hyper.lengthscale > 0.0) || !(hyper.signal_variance > 0.0) || !(hyper.noise_variance >= 0.0)) {
    throw Error(Errc::invalid_argument, "GP hyperparameters must be positive");
  }
  GpModel m;
  m.X_ = X;
  m.hyper_ = hyper;
  const auto n = static_cast<Eigen::Index>(y.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  m.y_mean_ = mean;
  m.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  m.y_std_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.y_std_[i] = (y[i] - mean) / m.y_scale_;

  const Eigen::MatrixXd K = se_kernel(X, X, hyper.lengthscale, hyper.signal_variance);
  auto f = detail::factorize(K, hyper.noise_variance);
  if (!f) throw Error(Errc::factorization_failed, "kernel matrix not positive definite even with maximum jitter");
  m.chol_ = std::move(f->first);
  m.jitter_ = f->second;
  m.alpha_ = m.chol_.solve(m.y_std_);
  const Eigen::VectorXd d = m.chol_.matrixLLT().diagonal();
  m.lml_ = -0.5 * m.y_std_.dot(m.alpha_) - d.array().log().sum() -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return m;
}

/// Fits every grid point and keeps the one with the largest log marginal
/// likelihood (first one on ties).
inline GpModel gp_fit_auto(const Matrix& X, std::span<const double> y,
                           const std::vector<GpHyper>& grid = default_hyper_grid()) {
  std::optional<GpModel> best;
  std::optional<Error> last_error;
  for (const auto& h : grid) {
    try {
      GpModel m = gp_fit(X, y, h);
      if (!best || m.log_marginal_likelihood() > best->log_marginal_likelihood()) best = std::move(m);
    } catch (const Error& e) {
      if (e.code() != Errc::factorization_failed) throw;
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return std::move(*best);
}

}  // namespace perfsampler::mobo
