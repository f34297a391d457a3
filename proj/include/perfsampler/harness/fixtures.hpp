#pragma once

#include <memory>
#include <string>
#include <vector>

#include "perfsampler/harness/synth.hpp"

namespace perfsampler {

/// Stand-ins for the four benchmark systems: option spaces with the same
/// full/pruned cardinalities and metric pairs, measured by a synthetic
/// landscape in which exactly the kept options matter.
struct SystemFixture {
  SynthSpec spec;
  std::size_t full_size = 0;
  std::size_t pruned_size = 0;

  const std::string& name() const { return spec.system; }

  std::map<std::string, OptionValue> pins() const {
    std::map<std::string, OptionValue> d;
    for (const auto& o : spec.space.options()) {
      if (!spec.sensitive.count(o.name)) d.emplace(o.name, o.default_value ? *o.default_value : o.values.front());
    }
    return d;
  }

  ConfigSpace pruned_space() const { return prune_space(spec.space, spec.sensitive, pins()); }
};

namespace detail {

inline ConfigOption int_option(std::string name, std::vector<std::int64_t> values, std::size_t default_index = 0) {
  ConfigOption o;
  o.name = std::move(name);
  o.kind = OptionKind::numeric;
  for (auto v : values) o.values.emplace_back(v);
  o.default_value = o.values.at(default_index);
  return o;
}

inline ConfigOption cat_option(std::string name, std::vector<std::string> values, std::size_t default_index = 0) {
  ConfigOption o;
  o.name = std::move(name);
  o.kind = OptionKind::categorical;
  for (auto& v : values) o.values.emplace_back(std::move(v));
  o.default_value = o.values.at(default_index);
  return o;
}

inline ConfigOption bool_option(std::string name, bool def = false) {
  ConfigOption o;
  o.name = std::move(name);
  o.kind = OptionKind::boolean;
  o.values = {OptionValue(false), OptionValue(true)};
  o.default_value = OptionValue(def);
  return o;
}

inline SystemFixture make_fixture(std::string system, std::vector<ConfigOption> options,
                                  std::set<std::string> insensitive, std::vector<std::string> metrics,
                                  std::vector<Direction> directions, std::uint64_t seed, std::size_t full,
                                  std::size_t pruned) {
  SystemFixture f;
  f.spec.system = std::move(system);
  f.spec.space = ConfigSpace(std::move(options));
  for (const auto& o : f.spec.space.options()) {
    if (!insensitive.count(o.name)) f.spec.sensitive.insert(o.name);
  }
  f.spec.metrics = std::move(metrics);
  f.spec.directions = std::move(directions);
  f.spec.seed = seed;
  f.spec.noise = 0.02;
  const std::vector<std::string> sens(f.spec.sensitive.begin(), f.spec.sensitive.end());
  if (sens.size() >= 2) f.spec.interactions.emplace_back(sens[0], sens[1]);
  if (sens.size() >= 4) f.spec.interactions.emplace_back(sens[2], sens[3]);
  f.full_size = full;
  f.pruned_size = pruned;
  return f;
}

}  // namespace detail

inline SystemFixture lrzip_fixture() {
  using namespace detail;
  return make_fixture("LRZIP",
                      {cat_option("algorithm", {"-b", "-g", "-l", "-n", "-z"}), int_option("-L", {8, 9}, 1),
                       int_option("-w", {1, 21, 41, 61, 81}), int_option("-p", {1, 2, 3, 4}, 3),
                       int_option("-N", {-20, -10, 0, 5, 10, 19}, 2)},
                      {"-N"}, {"compression_time", "max_memory"}, {Direction::minimize, Direction::minimize}, 11,
                      1200, 200);
}

inline SystemFixture javagc_fixture() {
  using namespace detail;
  return make_fixture("JavaGC",
                      {int_option("NewRatio", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}, 1),
                       int_option("SurvivorRatio", {2, 4, 6, 8, 10}, 3), int_option("MaxTenuringThreshold", {1, 5, 10, 15}, 3),
                       bool_option("UseAdaptiveSizePolicy", true), int_option("ParallelGCThreads", {1, 2, 4}, 2),
                       cat_option("GCLogLevel", {"off", "error", "info", "debug"})},
                      {"GCLogLevel"}, {"collection_time", "average_pause_time"},
                      {Direction::minimize, Direction::minimize}, 12, 6240, 1560);
}

inline SystemFixture sqlite_fixture() {
  using namespace detail;
  return make_fixture("SQLite",
                      {bool_option("SQLITE_DEFAULT_AUTOVACUUM"), bool_option("SQLITE_DEFAULT_MEMSTATUS", true),
                       bool_option("SQLITE_DEFAULT_WAL_SYNCHRONOUS"), bool_option("SQLITE_DIRECT_OVERFLOW_READ"),
                       bool_option("SQLITE_LIKE_DOESNT_MATCH_BLOBS"), bool_option("SQLITE_MAX_EXPR_DEPTH_0"),
                       bool_option("SQLITE_OMIT_DEPRECATED"), bool_option("SQLITE_OMIT_SHARED_CACHE"),
                       bool_option("SQLITE_USE_ALLOCA"), cat_option("journal_mode", {"DELETE", "TRUNCATE", "WAL"}),
                       int_option("user_version", {0, 1, 2, 3, 4, 5})},
                      {"user_version"}, {"response_time", "max_memory"}, {Direction::minimize, Direction::minimize},
                      13, 9216, 1536);
}

inline SystemFixture x264_fixture() {
  using namespace detail;
  return make_fixture("X264",
                      {cat_option("me", {"dia", "hex", "umh", "esa"}, 1), int_option("subme", {1, 4, 7, 9}, 2),
                       int_option("bframes", {0, 2, 4}, 1), int_option("rc_lookahead", {10, 40, 60}, 1),
                       int_option("merange", {8, 16, 24}, 1), bool_option("no_cabac"), bool_option("no_8x8dct"),
                       bool_option("weightb", true), bool_option("quiet"), bool_option("no_progress")},
                      {"quiet", "no_progress"}, {"encoding_time", "psnr"}, {Direction::minimize, Direction::maximize},
                      14, 13824, 3456);
}

inline std::vector<SystemFixture> benchmark_fixtures() {
  return {lrzip_fixture(), javagc_fixture(), sqlite_fixture(), x264_fixture()};
}

inline std::optional<SystemFixture> find_fixture(std::string_view name) {
  for (auto& f : benchmark_fixtures()) {
    std::string a(name), b(f.name());
    std::transform(a.begin(), a.end(), a.begin(), [](unsigned char c) { return std::tolower(c); });
    std::transform(b.begin(), b.end(), b.begin(), [](unsigned char c) { return std::tolower(c); });
    if (a == b) return f;
  }
  return std::nullopt;
}

}  // namespace perfsampler
