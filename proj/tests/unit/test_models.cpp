#include <gtest/gtest.h>

#include "perfsampler/perfsampler.hpp"

using namespace perfsampler;
using namespace perfsampler::models;

namespace {

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

struct Data {
  FeatureMatrix X;
  std::vector<double> y;
};

Data nonlinear(std::size_t n, std::uint64_t seed, double noise = 0.0) {
  Rng rng(seed);
  Data d{FeatureMatrix(static_cast<Eigen::Index>(n), 3), std::vector<double>(n)};
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) d.X(i, j) = rng.uniform();
    d.y[i] = 2 * d.X(i, 0) + (d.X(i, 1) > 0.5 ? 1.5 : 0.0) * d.X(i, 2) + noise * rng.normal();
  }
  return d;
}

}  // namespace

TEST(Metrics, Rmse) {
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}), std::sqrt(12.5));
  EXPECT_EQ(error_code([] { rmse(std::vector<double>{1}, std::vector<double>{1, 2}); }), Errc::dimension_mismatch);
}

TEST(RegressionTree, SplitsOnTheInformativeFeature) {
  FeatureMatrix X(8, 2);
  std::vector<double> y(8);
  for (int i = 0; i < 8; ++i) {
    X(i, 0) = i % 2;
    X(i, 1) = i;
    y[i] = i < 4 ? 0.0 : 10.0;
  }
  const auto t = RegressionTree::fit(X, y, {1, 1});
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(t.predict_row(X, i), y[i]);
}

TEST(Gbt, ConstantTargetsAndShrinkage) {
  const auto d = nonlinear(50, 1);
  const std::vector<double> flat(50, 4.2);
  const auto m = train_gbt(d.X, flat, {});
  for (double p : m.predict(d.X)) EXPECT_NEAR(p, 4.2, 1e-12);
  // With no rounds the model is just the training mean.
  GbtParams p;
  p.rounds = 0;
  const auto base = train_gbt(d.X, d.y, p);
  double mean = 0.0;
  for (double v : d.y) mean += v / 50;
  EXPECT_NEAR(base.predict(d.X)[7], mean, 1e-12);
}

TEST(Gbt, FitsAndGeneralizes) {
  const auto train = nonlinear(300, 2, 0.05);
  const auto test = nonlinear(300, 3, 0.0);
  const auto m = train_gbt(train.X, train.y, {});
  const auto& r = m.training_rmse();
  ASSERT_EQ(r.size(), 100u);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LE(r[i], r[i - 1]);
  EXPECT_LT(rmse(m.predict(test.X), test.y), 0.2);
  const auto back = GbtModel::from_json(m.to_json());
  EXPECT_EQ(back.predict(test.X), m.predict(test.X));
}

TEST(Gbt, RejectsBadInput) {
  const auto d = nonlinear(10, 4);
  GbtParams p;
  p.learning_rate = 0.0;
  EXPECT_EQ(error_code([&] { train_gbt(d.X, d.y, p); }), Errc::invalid_argument);
  auto y = d.y;
  y[3] = std::numeric_limits<double>::infinity();
  EXPECT_EQ(error_code([&] { train_gbt(d.X, y, {}); }), Errc::non_finite_input);
  EXPECT_EQ(error_code([&] { train_gbt(d.X, std::vector<double>{1, 2}, {}); }), Errc::invalid_argument);
}

TEST(Fnn, LossDecreasesAndModelIsDeterministic) {
  const auto d = nonlinear(120, 5, 0.02);
  FnnParams p;
  p.hidden = {16, 16};
  p.epochs = 400;
  p.seed = 9;
  const auto a = train_fnn(d.X, d.y, p);
  const auto b = train_fnn(d.X, d.y, p);
  EXPECT_EQ(a.predict(d.X), b.predict(d.X));
  const auto& h = a.loss_history();
  ASSERT_EQ(h.size(), 400u);
  EXPECT_LT(h.back(), 0.5 * h.front());
  const auto test = nonlinear(200, 6);
  double var = 0.0, mean = 0.0;
  for (double v : test.y) mean += v / 200;
  for (double v : test.y) var += (v - mean) * (v - mean) / 200;
  EXPECT_LT(rmse(a.predict(test.X), test.y), 0.5 * std::sqrt(var));
  EXPECT_NE(std::find(p.lambda_grid.begin(), p.lambda_grid.end(), a.lambda()), p.lambda_grid.end());
  const auto back = FnnModel::from_json(a.to_json());
  const auto pa = a.predict(test.X), pb = back.predict(test.X);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-12);
}

TEST(Fnn, RowOrderDoesNotMatter) {
  // The validation split is keyed on row content, not on row position.
  auto d = nonlinear(40, 7);
  FnnParams p;
  p.hidden = {8};
  p.epochs = 100;
  const auto a = train_fnn(d.X, d.y, p);
  Data r{FeatureMatrix(d.X.colwise().reverse()), std::vector<double>(d.y.rbegin(), d.y.rend())};
  const auto b = train_fnn(r.X, r.y, p);
  const auto pa = a.predict(d.X), pb = b.predict(d.X);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-9);
}

TEST(Fnn, ProximalStepProducesExactZeros) {
  const auto d = nonlinear(60, 8);
  FnnParams p;
  p.hidden = {32};
  p.epochs = 300;
  p.lambda = 0.5;
  const auto m = train_fnn(d.X, d.y, p);
  Eigen::Index zeros = 0;
  for (const auto& W : m.network().weights) zeros += (W.array() == 0.0).count();
  EXPECT_GT(zeros, 0);
}
