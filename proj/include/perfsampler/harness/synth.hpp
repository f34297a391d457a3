#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "perfsampler/harness/dataset.hpp"
#include "perfsampler/random.hpp"

namespace perfsampler {

/// Seeded synthetic performance landscape over a finite space. Two metrics
/// share per-option terms with opposite signs, so they trade off; only
/// sensitive options (and interactions among them) contribute.
struct SynthSpec {
  std::string system = "synthetic";
  ConfigSpace space;
  std::set<std::string> sensitive;
  std::vector<std::pair<std::string, std::string>> interactions;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> metrics{"time", "memory"};
  std::vector<Direction> directions{Direction::minimize, Direction::minimize};

  /// Accepts either an explicit "space" object or a "generate" block
  /// {"count", "min_levels", "max_levels"}; "sensitive" is a name list or
  /// "sensitive_fraction"; "interactions" is a list of name pairs or
  /// "n_interactions".
  static SynthSpec from_json(const Json& j) {
    SynthSpec s;
    s.system = j.value("system", s.system);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
    if (j.contains("metrics")) s.metrics = j["metrics"].get<std::vector<std::string>>();
    if (s.metrics.size() != 2) throw Error(Errc::invalid_argument, "synthetic landscapes have exactly two metrics");
    if (j.contains("directions")) {
      s.directions.clear();
      for (const auto& d : j["directions"]) s.directions.push_back(direction_from_string(d.get<std::string>()));
    }
    if (s.directions.size() != 2) throw Error(Errc::invalid_argument, "one direction per metric required");
    Rng rng(mix_seed(s.seed, 101));
    if (j.contains("space")) {
      s.space = space_from_json(j["space"]);
    } else {
      const Json g = j.value("generate", Json::object());
      const std::size_t count = g.value("count", std::size_t{8});
      const std::size_t lo = g.value("min_levels", std::size_t{2});
      const std::size_t hi = g.value("max_levels", std::size_t{4});
      if (count == 0 || lo < 2 || hi < lo) throw Error(Errc::invalid_argument, "bad generate block");
      std::vector<ConfigOption> opts;
      for (std::size_t i = 0; i < count; ++i) {
        ConfigOption o;
        o.name = "opt" + std::to_string(i + 1);
        switch (i % 3) {
          case 0: {
            o.kind = OptionKind::numeric;
            const std::size_t levels = lo + rng.index(hi - lo + 1);
            for (std::size_t v = 0; v < levels; ++v) o.values.emplace_back(static_cast<std::int64_t>(1 << v));
            break;
          }
          case 1: {
            o.kind = OptionKind::categorical;
            const std::size_t levels = lo + rng.index(hi - lo + 1);
            for (std::size_t v = 0; v < levels; ++v) o.values.emplace_back(std::string(1, static_cast<char>('a' + v)));
            break;
          }
          default:
            o.kind = OptionKind::boolean;
            o.values = {OptionValue(false), OptionValue(true)};
        }
        o.default_value = o.values.front();
        opts.push_back(std::move(o));
      }
      s.space = ConfigSpace(std::move(opts));
    }
    const auto& opts = s.space.options();
    if (j.contains("sensitive") && j["sensitive"].is_array()) {
      for (const auto& n : j["sensitive"]) s.sensitive.insert(n.get<std::string>());
    } else {
      const double frac = j.value("sensitive_fraction", 0.5);
      const auto n = static_cast<std::size_t>(std::lround(frac * static_cast<double>(opts.size())));
      for (auto i : rng.sample_indices(opts.size(), n)) s.sensitive.insert(opts[i].name);
    }
    if (j.contains("interactions") && j["interactions"].is_array()) {
      for (const auto& p : j["interactions"]) s.interactions.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    } else {
      const std::size_t n = j.value("n_interactions", std::size_t{2});
      std::vector<std::string> sens(s.sensitive.begin(), s.sensitive.end());
      for (std::size_t t = 0; t < n && sens.size() >= 2; ++t) {
        const auto pick = rng.sample_indices(sens.size(), 2);
        s.interactions.emplace_back(sens[pick[0]], sens[pick[1]]);
      }
    }
    for (const auto& n : s.sensitive) {
      if (!s.space.find(n)) throw Error(Errc::unknown_option, "sensitive option '" + n + "' is not in the space");
    }
    return s;
  }

  Json to_json() const {
    Json j;
    j["system"] = system;
    j["space"] = space_to_json(space);
    j["sensitive"] = std::vector<std::string>(sensitive.begin(), sensitive.end());
    j["interactions"] = Json::array();
    for (const auto& [a, b] : interactions) j["interactions"].push_back({a, b});
    j["noise"] = noise;
    j["seed"] = seed;
    j["metrics"] = metrics;
    j["directions"] = Json::array();
    for (auto d : directions) j["directions"].push_back(std::string(to_string(d)));
    return j;
  }
};

inline MeasuredDataset synth_landscape(const SynthSpec& spec) {
  const auto& opts = spec.space.options();
  for (const auto& n : spec.sensitive) {
    if (!spec.space.find(n)) throw Error(Errc::unknown_option, "sensitive option '" + n + "' is not in the space");
  }
  Rng rng(spec.seed);
  // Per-option value levels f_o in [0, 1].
  std::vector<std::vector<double>> level(opts.size());
  for (std::size_t o = 0; o < opts.size(); ++o) {
    const auto& opt = opts[o];
    for (std::size_t v = 0; v < opt.values.size(); ++v) {
      double f = 0.0;
      if (opt.kind == OptionKind::categorical) {
        f = rng.uniform();
      } else if (opt.kind == OptionKind::boolean) {
        f = as_number(opt.values[v]) != 0.0 ? 1.0 : 0.0;
      } else {
        const double lo = as_number(opt.values.front());
        const double hi = as_number(opt.values.back());
        f = hi > lo ? (as_number(opt.values[v]) - lo) / (hi - lo) : 0.0;
      }
      level[o].push_back(f);
    }
  }
  std::vector<double> w1(opts.size(), 0.0), w2(opts.size(), 0.0);
  for (std::size_t o = 0; o < opts.size(); ++o) {
    const double s = 0.5 + 1.5 * rng.uniform();
    const double u1 = 1.0 + 0.25 * (2.0 * rng.uniform() - 1.0);
    const double u2 = 1.0 + 0.25 * (2.0 * rng.uniform() - 1.0);
    if (!spec.sensitive.count(opts[o].name)) continue;
    w1[o] = s * u1;
    w2[o] = -s * u2;
  }
  struct Pair {
    std::size_t a, b;
    double w1, w2;
  };
  std::vector<Pair> pairs;
  for (const auto& [a, b] : spec.interactions) {
    auto ia = spec.space.find(a);
    auto ib = spec.space.find(b);
    const double p1 = 0.5 + rng.uniform();
    const double p2 = -p1 * (0.75 + 0.5 * rng.uniform());
    if (!ia || !ib || *ia == *ib || !spec.sensitive.count(a) || !spec.sensitive.count(b)) continue;
    pairs.push_back({*ia, *ib, p1, p2});
  }
  // Metric 1 rises and metric 2 falls with every sensitive level; both stay
  // within [1, top]. A maximized metric is mirrored inside that interval so
  // the two costs still pull in opposite directions.
  double top1 = 1.0, top2 = 1.0;
  for (std::size_t o = 0; o < opts.size(); ++o) {
    top1 += w1[o];
    top2 -= w2[o];
  }
  for (const auto& p : pairs) {
    top1 += p.w1;
    top2 -= p.w2;
  }
  const double base1 = 1.0, base2 = top2;
  const bool mirror1 = spec.directions[0] == Direction::maximize;
  const bool mirror2 = spec.directions[1] == Direction::maximize;

  MeasuredDataset ds;
  ds.system = spec.system;
  ds.space = std::make_shared<const EnumeratedSpace>(spec.space);
  ds.metrics = ObjectiveSpec(spec.metrics, spec.directions);
  Rng noise(mix_seed(spec.seed, 1));
  ds.values.reserve(ds.space->size());
  for (std::size_t r = 0; r < ds.space->size(); ++r) {
    const auto idx = ds.space->indices(r);
    double m1 = base1, m2 = base2;
    for (std::size_t o = 0; o < opts.size(); ++o) {
      m1 += w1[o] * level[o][idx[o]];
      m2 += w2[o] * level[o][idx[o]];
    }
    for (const auto& p : pairs) {
      const double f = level[p.a][idx[p.a]] * level[p.b][idx[p.b]];
      m1 += p.w1 * f;
      m2 += p.w2 * f;
    }
    if (mirror1) m1 = top1 + 1.0 - m1;
    if (mirror2) m2 = top2 + 1.0 - m2;
    const double e1 = noise.normal();
    const double e2 = noise.normal();
    ds.values.push_back({m1 + spec.noise * e1, m2 + spec.noise * e2});
  }
  return ds;
}

/// Documentation array for a synthetic space: sensitive options get a
/// description that mentions a performance effect, the others say they have
/// none.
inline std::vector<ConfigOption> synth_docs(const SynthSpec& spec) {
  std::vector<ConfigOption> docs = spec.space.options();
  for (auto& d : docs) {
    d.description = spec.sensitive.count(d.name)
                        ? "Controls how much work the system does per request; changes speed and memory use."
                        : "Cosmetic setting (logging format and labels). Does not affect speed or memory.";
    if (!d.default_value) d.default_value = d.values.front();
  }
  return docs;
}

/// Scripted chat responses that behave like a competent model on a synthetic
/// landscape: the filter keeps exactly the sensitive options, the analyzer and
/// designer answer generically, and each generator proposes `batch`
/// configurations per iteration drawn around a shared core, so votes overlap.
inline Json synth_mock_script(const SynthSpec& spec, std::size_t iterations, std::size_t n_generators,
                              std::size_t batch, std::uint64_t seed) {
  std::map<std::string, OptionValue> defaults;
  std::vector<std::string> drop;
  for (const auto& o : spec.space.options()) {
    if (!spec.sensitive.count(o.name)) {
      defaults.emplace(o.name, o.default_value ? *o.default_value : o.values.front());
      drop.push_back(o.name);
    }
  }
  const ConfigSpace pruned = prune_space(spec.space, spec.sensitive, defaults);
  const EnumeratedSpace active(pruned);
  Json entries = Json::array();
  Json rationale = Json::object();
  for (const auto& o : spec.space.options()) {
    rationale[o.name] = spec.sensitive.count(o.name) ? "affects the amount of work" : "documented as having no effect";
  }
  entries.push_back({{"role_tag", "filter"},
                     {"iteration", "*"},
                     {"response", {{"keep", std::vector<std::string>(spec.sensitive.begin(), spec.sensitive.end())},
                                   {"drop", drop},
                                   {"rationale", rationale}}}});
  Json hypotheses = Json::array();
  Json focus = Json::array();
  for (const auto& o : pruned.options()) {
    hypotheses.push_back({{"option", o.name}, {"sensitivity", "high"}, {"note", "drives both metrics"}});
    Json vals = Json::array();
    for (const auto& v : o.values) vals.push_back(to_json(v));
    focus.push_back({{"option", o.name}, {"values", vals}});
  }
  entries.push_back({{"role_tag", "analyzer"},
                     {"iteration", "*"},
                     {"response",
                      {{"narrative", "Both metrics move with the tunable options in opposite directions."},
                       {"anomalies", Json::array()},
                       {"hypotheses", hypotheses}}}});
  entries.push_back({{"role_tag", "designer"},
                     {"iteration", "*"},
                     {"response",
                      {{"narrative", "Spread the batch over every value of the tunable options."},
                       {"focus_regions", focus},
                       {"deprioritized", Json::array()}}}});
  Rng rng(seed);
  for (std::size_t it = 1; it <= iterations; ++it) {
    const auto core = rng.sample_indices(active.size(), std::min(batch, active.size()));
    for (std::size_t g = 1; g <= n_generators; ++g) {
      Json configs = Json::array();
      for (auto c : core) {
        const std::size_t pick = rng.bernoulli(0.7) ? c : rng.index(active.size());
        configs.push_back(configuration_to_json(active.configuration(pick)));
      }
      entries.push_back({{"role_tag", "generator"},
                         {"iteration", static_cast<int>(it)},
                         {"matcher", "generator #" + std::to_string(g) + "."},
                         {"response", {{"configurations", configs}}}});
    }
  }
  // Past the scripted iterations generators return nothing and the loop
  // falls back to random configurations.
  entries.push_back({{"role_tag", "generator"}, {"iteration", "*"}, {"response", {{"configurations", Json::array()}}}});
  return Json{{"entries", entries}};
}

}  // namespace perfsampler
