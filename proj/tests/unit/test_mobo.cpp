#include <gtest/gtest.h>

#include "perfsampler/perfsampler.hpp"

using namespace perfsampler;
using namespace perfsampler::mobo;

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

std::vector<Point> random_front(Rng& rng, std::size_t m, std::size_t n) {
  std::vector<Point> cloud(n, Point(m));
  for (auto& p : cloud) {
    for (auto& v : p) v = rng.uniform();
  }
  std::vector<Point> front;
  const auto fronts = non_dominated_sort(cloud);
  for (auto i : fronts.front()) front.push_back(cloud[i]);
  return front;
}

}  // namespace

TEST(Pareto, DominanceBasics) {
  EXPECT_TRUE(dominates(std::vector<double>{1, 2}, std::vector<double>{1, 3}));
  EXPECT_FALSE(dominates(std::vector<double>{1, 3}, std::vector<double>{1, 3}));
  EXPECT_FALSE(dominates(std::vector<double>{0, 4}, std::vector<double>{1, 3}));
  const std::vector<Point> pts{{1, 1}, {2, 2}, {0, 3}, {3, 3}, {2, 2}};
  const auto fronts = non_dominated_sort(pts);
  ASSERT_EQ(fronts.size(), 3u);
  EXPECT_EQ(front_ranks(fronts, pts.size()), (std::vector<std::size_t>{0, 1, 0, 2, 1}));
}

TEST(Hypervolume, TwoDimensionalAgreesWithRecursion) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto f = random_front(rng, 2, 12);
    const Point ref{1.0, 1.0};
    EXPECT_NEAR(mobo::detail::hv2d(f, ref), mobo::detail::hv_recursive(f, ref), 1e-12);
  }
}

TEST(Hypervolume, InvariantsAndImprovement) {
  Rng rng(2);
  for (int t = 0; t < 40; ++t) {
    const std::size_t m = 2 + t % 3;
    const auto f = random_front(rng, m, 10);
    const Point ref(m, 1.0);
    const double hv = hypervolume(f, ref);
    // Adding a dominated point changes nothing.
    auto more = f;
    Point worse = f.front();
    for (auto& v : worse) v = std::min(0.999, v + 0.01);
    more.push_back(worse);
    EXPECT_NEAR(hypervolume(more, ref), hv, 1e-12);
    // The improvement of y equals HV(front + y) - HV(front).
    const ParetoFront front(f, ref);
    EXPECT_NEAR(front.volume(), hv, 1e-12);
    for (int s = 0; s < 10; ++s) {
      Point y(m);
      for (auto& v : y) v = 1.1 * rng.uniform();
      // Points outside the reference box add nothing.
      const bool inside = std::all_of(y.begin(), y.end(), [](double v) { return v < 1.0; });
      auto with = f;
      with.push_back(y);
      const double expected = inside ? std::max(0.0, hypervolume(with, ref) - hv) : 0.0;
      EXPECT_NEAR(front.improvement(y), expected, 1e-12);
    }
  }
  EXPECT_EQ(error_code([] { ParetoFront({{0, 0}, {1, 1}}, {2, 2}); }), Errc::invalid_argument);
  EXPECT_EQ(error_code([] { ParetoFront({{3, 0}}, {2, 2}); }), Errc::invalid_argument);
}

TEST(Qmc, MomentsAndDeterminism) {
  const QmcNormals a(3, 5), b(3, 5), c(3, 6);
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < a.draws(); ++i) {
    for (double z : a.draw(i)) {
      mean += z;
      sq += z * z;
    }
  }
  const double n = 3.0 * static_cast<double>(a.draws());
  EXPECT_NEAR(mean / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.05);
  EXPECT_EQ(std::vector<double>(a.draw(17).begin(), a.draw(17).end()), std::vector<double>(b.draw(17).begin(), b.draw(17).end()));
  EXPECT_NE(std::vector<double>(a.draw(17).begin(), a.draw(17).end()), std::vector<double>(c.draw(17).begin(), c.draw(17).end()));
  EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-8);
}

TEST(Ehvi, ArgmaxMatchesFullScan) {
  Rng rng(3);
  const QmcNormals qmc(2, 9, 512);
  for (int t = 0; t < 20; ++t) {
    const ParetoFront front(random_front(rng, 2, 8), {1.2, 1.2});
    std::vector<std::vector<double>> means(2), sds(2);
    for (int c = 0; c < 60; ++c) {
      for (int j = 0; j < 2; ++j) {
        means[j].push_back(rng.uniform() * 1.4 - 0.1);
        sds[j].push_back(rng.uniform() * 0.2);
      }
    }
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < 60; ++c) {
      const double v = ehvi(std::vector<double>{means[0][c], means[1][c]}, std::vector<double>{sds[0][c], sds[1][c]}, front, qmc);
      if (v > best) {
        best = v;
        arg = c;
      }
    }
    const auto choice = ehvi_argmax(means, sds, front, qmc);
    EXPECT_EQ(choice.index, arg);
    EXPECT_DOUBLE_EQ(choice.value, best);
    EXPECT_LE(choice.evaluated, 60u);
  }
}

TEST(Gp, ErrorsAndHyperSelection) {
  Matrix X(3, 2);
  X << 0, 0, 1, 0, 0, 1;
  const std::vector<double> y{1, 2, 3};
  EXPECT_EQ(error_code([&] { gp_fit(X, std::vector<double>{1, 2}, {}); }), Errc::invalid_argument);
  EXPECT_EQ(error_code([&] { gp_fit(X, std::vector<double>{1, 2, NAN}, {}); }), Errc::non_finite_input);
  EXPECT_EQ(error_code([&] { gp_fit(X, y, {-1.0, 1.0, 0.0}); }), Errc::invalid_argument);
  const auto m = gp_fit(X, y, {});
  EXPECT_EQ(error_code([&] { m.predict(std::vector<double>{1, 2, 3}); }), Errc::dimension_mismatch);
  // Duplicate inputs with zero noise need jitter but still factorize.
  Matrix D(2, 1);
  D << 0.5, 0.5;
  const auto dup = gp_fit(D, std::vector<double>{1.0, 1.0}, {1.0, 1.0, 0.0});
  EXPECT_GT(dup.jitter(), 0.0);

  const auto grid = default_hyper_grid();
  EXPECT_EQ(grid.size(), 45u);
  const auto best = gp_fit_auto(X, y, grid);
  for (const auto& h : grid) EXPECT_LE(gp_fit(X, y, h).log_marginal_likelihood(), best.log_marginal_likelihood() + 1e-12);
}

TEST(Gp, PosteriorVarianceShrinksNearData) {
  Rng rng(4);
  Matrix X(10, 2);
  std::vector<double> y(10);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    X(i, 0) = rng.uniform();
    X(i, 1) = rng.uniform();
    y[i] = X(i, 0) + X(i, 1);
  }
  const auto m = gp_fit(X, y, {0.3, 1.0, 1e-4});
  const auto near = m.predict(std::vector<double>{X(0, 0), X(0, 1)});
  const auto far = m.predict(std::vector<double>{5.0, 5.0});
  EXPECT_LT(near.variance, far.variance);
  EXPECT_GE(near.variance, 0.0);
  EXPECT_NEAR(far.mean, m.target_mean(), 1e-6);  // reverts to the prior mean
}

TEST(BoSamplers, ReferencePointLiesBeyondEveryCost) {
  const std::vector<Point> costs{{1, -5}, {3, -2}, {0, 0}};
  const auto ref = reference_point(costs);
  for (const auto& c : costs) {
    for (std::size_t j = 0; j < c.size(); ++j) EXPECT_LT(c[j], ref[j]);
  }
}
