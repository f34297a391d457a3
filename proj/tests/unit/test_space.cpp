#include <gtest/gtest.h>

#include <set>

#include "perfsampler/harness/fixtures.hpp"
#include "perfsampler/space/config_space.hpp"

using namespace perfsampler;

namespace {

ConfigSpace small_space(std::vector<Constraint> constraints = {}) {
  return ConfigSpace({detail::cat_option("algo", {"a", "b", "c"}), detail::int_option("level", {1, 5, 9}, 1),
                      detail::bool_option("fast")},
                     std::move(constraints));
}

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

}  // namespace

TEST(ConfigSpace, EnumerationIsProductWithoutConstraints) {
  EnumeratedSpace e(small_space());
  EXPECT_EQ(e.size(), 18u);
  std::set<Configuration> seen;
  for (std::size_t i = 0; i < e.size(); ++i) seen.insert(e.configuration(i));
  EXPECT_EQ(seen.size(), 18u);
}

TEST(ConfigSpace, IndexOfInvertsConfiguration) {
  for (const auto& f : benchmark_fixtures()) {
    EnumeratedSpace e(f.spec.space);
    ASSERT_EQ(e.size(), f.full_size) << f.name();
    for (std::size_t i = 0; i < e.size(); i += 37) {
      const auto c = e.configuration(i);
      EXPECT_EQ(e.index_of(c), i);
      EXPECT_TRUE(validate_configuration(e.space(), c).valid());
    }
  }
}

TEST(ConfigSpace, ConstraintsRemoveForbiddenCombinations) {
  Constraint c;
  c.forbidden = {{"algo", OptionValue(std::string("a"))}, {"fast", OptionValue(true)}};
  EnumeratedSpace e(small_space({c}));
  EXPECT_EQ(e.size(), 15u);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto cfg = e.configuration(i);
    EXPECT_FALSE(cfg.at("algo") == OptionValue(std::string("a")) && cfg.at("fast") == OptionValue(true));
  }
  Configuration bad;
  bad.set("algo", std::string("a"));
  bad.set("level", std::int64_t{5});
  bad.set("fast", true);
  EXPECT_EQ(validate_configuration(e.space(), bad).rule, ValidationRule::constraint_violation);
  EXPECT_FALSE(e.index_of(bad).has_value());
}

TEST(ConfigSpace, ValidationRules) {
  const auto space = small_space();
  Configuration c;
  c.set("algo", std::string("b"));
  c.set("level", std::int64_t{9});
  EXPECT_EQ(validate_configuration(space, c).rule, ValidationRule::missing_option);
  c.set("fast", false);
  EXPECT_TRUE(validate_configuration(space, c).valid());
  c.set("level", std::int64_t{4});
  EXPECT_EQ(validate_configuration(space, c).rule, ValidationRule::inadmissible_value);
  c.set("level", 9.0);  // same numeric level
  EXPECT_TRUE(validate_configuration(space, c).valid());
  c.set("extra", std::int64_t{1});
  EXPECT_EQ(validate_configuration(space, c).rule, ValidationRule::unknown_option);
}

TEST(ConfigSpace, RejectsMalformedOptions) {
  EXPECT_EQ(error_code([] { ConfigSpace({detail::int_option("x", {1, 1})}); }), Errc::invalid_option);
  EXPECT_EQ(error_code([] { ConfigSpace({detail::int_option("x", {3, 1})}); }), Errc::invalid_option);
  EXPECT_EQ(error_code([] { ConfigSpace({detail::int_option("x", {1}), detail::int_option("x", {2})}); }),
            Errc::duplicate_or_missing_name);
  EXPECT_EQ(error_code([] {
              auto o = detail::int_option("x", {1, 2});
              o.default_value = std::int64_t{7};
              ConfigSpace({o});
            }),
            Errc::inadmissible_value);
  EXPECT_EQ(error_code([] { EnumeratedSpace(small_space(), 10); }), Errc::cardinality_over_limit);
}

TEST(ConfigSpace, JsonRoundTrip) {
  Constraint c;
  c.forbidden = {{"algo", OptionValue(std::string("c"))}, {"level", OptionValue(std::int64_t{9})}};
  const auto space = small_space({c});
  const auto back = space_from_json(space_to_json(space));
  EXPECT_EQ(space_to_json(back).dump(), space_to_json(space).dump());
  EXPECT_EQ(EnumeratedSpace(back).size(), EnumeratedSpace(space).size());
}

TEST(ConfigSpace, PruningPinsDroppedOptions) {
  const auto space = small_space();
  const auto pruned = prune_space(space, {"algo"}, {{"level", std::int64_t{5}}, {"fast", true}});
  EXPECT_EQ(pruned.size(), 1u);
  EXPECT_EQ(EnumeratedSpace(pruned).size(), 3u);
  Configuration c;
  c.set("algo", std::string("b"));
  const auto full = pruned.complete(c);
  EXPECT_TRUE(validate_configuration(space, full).valid());
  EXPECT_EQ(full.at("level"), OptionValue(std::int64_t{5}));
  EXPECT_EQ(error_code([&] { prune_space(space, {"algo"}, {{"level", std::int64_t{5}}}); }), Errc::missing_default);
  EXPECT_EQ(error_code([&] { prune_space(space, {"nope"}, {}); }), Errc::unknown_option);
  // Pruning twice keeps the first pins.
  const auto twice = prune_space(pruned, {}, {{"algo", std::string("c")}});
  EXPECT_EQ(twice.dropped().size(), 3u);
}

TEST(ConfigSpace, PrunedSizesOfBenchmarkFixtures) {
  for (const auto& f : benchmark_fixtures()) {
    EXPECT_EQ(EnumeratedSpace(f.pruned_space()).size(), f.pruned_size) << f.name();
  }
}

TEST(ConfigSpace, EncoderScalesAndOneHots) {
  EnumeratedSpace e(small_space());
  EXPECT_EQ(e.dimension(), 5u);  // 3 one-hot + level + fast
  Configuration c;
  c.set("algo", std::string("b"));
  c.set("level", std::int64_t{5});
  c.set("fast", true);
  const auto f = e.features(*e.index_of(c));
  EXPECT_EQ(std::vector<double>(f.begin(), f.end()), (std::vector<double>{0, 1, 0, 0.5, 1}));
}

TEST(ConfigSpace, LenientTextMatching) {
  const auto b = detail::bool_option("flag");
  EXPECT_EQ(b.match_text("true"), 1u);
  EXPECT_EQ(b.match_text("0"), 0u);
  const auto n = detail::int_option("n", {8, 16});
  EXPECT_EQ(n.match_text("16.0"), 1u);
  EXPECT_EQ(n.match_json(Json(8.0)), 0u);
  EXPECT_FALSE(n.match_text("12").has_value());
}

TEST(ConfigSpace, DocumentationParsing) {
  const auto docs = parse_documentation(R"([{"name": "-L", "description": "level", "values": [8, 9], "default": 9},
                                            {"name": "-N", "description": "nice"}])");
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].kind, OptionKind::numeric);
  EXPECT_TRUE(docs[1].values.empty());
  EXPECT_EQ(error_code([] { parse_documentation(R"([{"name": "a"}, {"name": "a"}])"); }),
            Errc::duplicate_or_missing_name);
  EXPECT_EQ(error_code([] { parse_documentation("{"); }), Errc::malformed_json);
}
