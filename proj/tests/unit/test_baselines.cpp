#include <gtest/gtest.h>

#include <mutex>
#include <set>

#include "perfsampler/perfsampler.hpp"

using namespace perfsampler;

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

// Records every configuration the sampler asks about.
class CountingOracle : public MeasurementOracle {
 public:
  explicit CountingOracle(std::shared_ptr<const MeasuredDataset> ds) : inner_(std::move(ds)) {}
  MetricValues measure(const Configuration& c) const override {
    std::lock_guard lock(mutex_);
    asked_.insert(c);
    ++calls_;
    return inner_.measure(c);
  }
  std::set<Configuration> asked() const { return asked_; }
  std::size_t calls() const { return calls_; }

 private:
  DatasetOracle inner_;
  mutable std::mutex mutex_;
  mutable std::set<Configuration> asked_;
  mutable std::size_t calls_ = 0;
};

SamplerOutcome run(const std::string& kind, const EnumeratedSpace& space, std::size_t k, std::uint64_t seed,
                   const MeasurementOracle& oracle, const ObjectiveSpec& all) {
  const ObjectiveSpec single = all.only(0);
  if (kind == "random") return sample_random(space, k, seed);
  if (kind == "nsbs") return sample_nsbs(space, k, seed);
  if (kind == "genetic") return sample_genetic(space, k, seed, oracle, single);
  if (kind == "flash") return sample_flash(space, k, seed, oracle, single);
  if (kind == "comsa") return sample_comsa(space, k, seed, oracle, single);
  if (kind == "nsga3") return sample_nsga3(space, k, seed, oracle, all);
  if (kind == "ehvi") return mobo::sample_ehvi(space, k, seed, oracle, all);
  return mobo::sample_tsemo(space, k, seed, oracle, all);
}

const std::vector<std::string> kKinds{"random", "nsbs", "genetic", "flash", "comsa", "nsga3", "ehvi", "tsemo"};

struct Landscape {
  std::shared_ptr<const MeasuredDataset> data =
      std::make_shared<const MeasuredDataset>(synth_landscape(lrzip_fixture().spec));
};

}  // namespace

TEST(Samplers, ContractOnSmallSpace) {
  Landscape l;
  const auto& space = *l.data->space;
  for (const auto& kind : kKinds) {
    for (std::size_t k : {1u, 5u, 12u, 40u}) {
      const CountingOracle oracle(l.data);
      const auto a = run(kind, space, k, 11, oracle, l.data->metrics);
      ASSERT_EQ(a.sampled.size(), k) << kind;
      const std::set<Configuration> distinct(a.sampled.begin(), a.sampled.end());
      EXPECT_EQ(distinct.size(), k) << kind;
      for (const auto& c : a.sampled) EXPECT_TRUE(validate_configuration(space.space(), c).valid()) << kind;
      // Only returned configurations are ever measured, each once.
      if (kind != "random" && kind != "nsbs") {
        EXPECT_EQ(oracle.asked(), distinct) << kind << " k=" << k;
        EXPECT_EQ(oracle.calls(), k) << kind << " k=" << k;
      } else {
        EXPECT_EQ(oracle.calls(), 0u);
      }
      const auto b = run(kind, space, k, 11, oracle, l.data->metrics);
      EXPECT_EQ(a.to_json().dump(), b.to_json().dump()) << kind;
    }
    const CountingOracle oracle(l.data);
    const auto x = run(kind, space, 20, 1, oracle, l.data->metrics);
    const auto y = run(kind, space, 20, 2, oracle, l.data->metrics);
    EXPECT_NE(x.to_json()["configurations"].dump(), y.to_json()["configurations"].dump()) << kind << " ignores its seed";
  }
}

TEST(Samplers, BudgetLimits) {
  Landscape l;
  const auto& space = *l.data->space;
  const DatasetOracle oracle(l.data);
  for (const auto& kind : kKinds) {
    EXPECT_EQ(error_code([&] { run(kind, space, space.size() + 1, 1, oracle, l.data->metrics); }),
              Errc::budget_exceeds_space)
        << kind;
    EXPECT_EQ(error_code([&] { run(kind, space, 0, 1, oracle, l.data->metrics); }), Errc::invalid_argument) << kind;
  }
  // Exhausting a small space returns all of it.
  const auto pruned = EnumeratedSpace(lrzip_fixture().pruned_space());
  const auto all = sample_random(pruned, pruned.size(), 3);
  EXPECT_EQ(std::set<Configuration>(all.sampled.begin(), all.sampled.end()).size(), pruned.size());
}

TEST(Samplers, ObjectiveArity) {
  Landscape l;
  const auto& space = *l.data->space;
  const DatasetOracle oracle(l.data);
  EXPECT_EQ(error_code([&] { sample_flash(space, 10, 1, oracle, l.data->metrics); }), Errc::invalid_argument);
  EXPECT_EQ(error_code([&] { mobo::sample_ehvi(space, 10, 1, oracle, l.data->metrics.only(0)); }), Errc::invalid_argument);
  EXPECT_EQ(error_code([&] { mobo::sample_tsemo(space, 10, 1, oracle, l.data->metrics.only(1)); }), Errc::invalid_argument);
}

TEST(Samplers, RandomIsRoughlyUniform) {
  const EnumeratedSpace space(lrzip_fixture().pruned_space());  // 200 configurations
  std::vector<int> hits(space.size(), 0);
  const int trials = 2000;
  for (int s = 0; s < trials; ++s) {
    for (const auto& c : sample_random(space, 10, s).sampled) ++hits[*space.index_of(c)];
  }
  // Expected 100 hits each; binomial sd ~ 9.7.
  for (int h : hits) {
    EXPECT_GT(h, 50);
    EXPECT_LT(h, 150);
  }
}

TEST(Samplers, NsbsIsGreedyMaxMin) {
  const EnumeratedSpace space(javagc_fixture().pruned_space());
  const auto out = sample_nsbs(space, 15, 4);
  std::vector<std::size_t> chosen{*space.index_of(out.sampled[0])};
  for (std::size_t t = 1; t < out.sampled.size(); ++t) {
    double best = -1.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      double near = std::numeric_limits<double>::infinity();
      for (auto c : chosen) near = std::min(near, manhattan(space.features(i), space.features(c)));
      best = std::max(best, near);
    }
    const std::size_t pick = *space.index_of(out.sampled[t]);
    double near = std::numeric_limits<double>::infinity();
    for (auto c : chosen) near = std::min(near, manhattan(space.features(pick), space.features(c)));
    EXPECT_DOUBLE_EQ(near, best) << "pick " << t;
    chosen.push_back(pick);
  }
}

TEST(Nsga3, ReferenceDirections) {
  for (std::size_t m = 2; m <= 4; ++m) {
    for (std::size_t p = 1; p <= 6; ++p) {
      const auto refs = das_dennis(m, p);
      EXPECT_EQ(refs.size(), binomial(m + p - 1, p));
      std::set<mobo::Point> distinct(refs.begin(), refs.end());
      EXPECT_EQ(distinct.size(), refs.size());
      for (const auto& r : refs) {
        double s = 0.0;
        for (double v : r) {
          EXPECT_GE(v, 0.0);
          s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
    }
  }
}

TEST(Nsga3, SelectionKeepsWholeFrontsFirst) {
  Rng rng(3);
  const std::vector<mobo::Point> costs{{1, 5}, {2, 4}, {3, 3}, {2, 6}, {4, 4}, {5, 5}, {6, 6}};
  const auto refs = das_dennis(2, 4);
  const auto sel = nsga3_select(costs, 3, refs, rng);
  EXPECT_EQ(std::set<std::size_t>(sel.chosen.begin(), sel.chosen.end()), (std::set<std::size_t>{0, 1, 2}));
  EXPECT_FALSE(sel.niching_used);
  const auto more = nsga3_select(costs, 4, refs, rng);
  EXPECT_EQ(more.chosen.size(), 4u);
  EXPECT_TRUE(more.niching_used);
  for (std::size_t i : {0u, 1u, 2u}) EXPECT_NE(std::find(more.chosen.begin(), more.chosen.end(), i), more.chosen.end());
}

TEST(Samplers, GuidedSearchBeatsRandomOnAverage) {
  // On the synthetic landscape the surrogate-guided samplers should find
  // better minima of the first metric than uniform sampling with the same
  // budget, averaged over seeds.
  Landscape l;
  const auto& space = *l.data->space;
  const DatasetOracle oracle(l.data);
  auto best_of = [&](const SamplerOutcome& o) {
    double b = std::numeric_limits<double>::infinity();
    for (const auto& c : o.sampled) b = std::min(b, l.data->value(*l.data->row_of(c), 0));
    return b;
  };
  for (const std::string kind : {"flash", "comsa", "genetic"}) {
    double guided = 0.0, uniform = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      guided += best_of(run(kind, space, 30, s, oracle, l.data->metrics));
      uniform += best_of(sample_random(space, 30, s));
    }
    EXPECT_LE(guided, uniform) << kind;
  }
}
