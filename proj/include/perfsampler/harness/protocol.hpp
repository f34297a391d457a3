#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "perfsampler/harness/dataset.hpp"
#include "perfsampler/harness/fixtures.hpp"
#include "perfsampler/harness/stats.hpp"
#include "perfsampler/harness/synth.hpp"
#include "perfsampler/llm/pipeline.hpp"
#include "perfsampler/mobo/samplers.hpp"
#include "perfsampler/models/fnn.hpp"
#include "perfsampler/models/gbt.hpp"
#include "perfsampler/models/metrics.hpp"
#include "perfsampler/sampling/baselines.hpp"

namespace perfsampler {

enum class SpaceMode { full, pruned };

constexpr std::string_view to_string(SpaceMode m) { return m == SpaceMode::full ? "full" : "pruned"; }

inline SpaceMode space_mode_from_string(std::string_view s) {
  if (s == "full") return SpaceMode::full;
  if (s == "pruned") return SpaceMode::pruned;
  throw Error(Errc::invalid_argument, "space mode must be \"full\" or \"pruned\", got '" + std::string(s) + "'");
}

inline const std::vector<std::string>& sampler_kinds() {
  static const std::vector<std::string> kinds{"random", "genetic", "flash", "comsa", "nsbs",
                                              "nsga3",  "ehvi",    "tsemo", "llm4perf"};
  return kinds;
}

/// Samplers that optimize all metrics jointly and are run once per repetition.
inline bool is_multi_objective(std::string_view kind) {
  return kind == "llm4perf" || kind == "ehvi" || kind == "tsemo" || kind == "nsga3";
}

/// Samplers that never look at measurements; one draw serves every metric.
inline bool is_space_only(std::string_view kind) { return kind == "random" || kind == "nsbs"; }

// ---------------------------------------------------------------------------
// Experiment specification

/// A measured system: the full dataset, the pruned space baselines are run on
/// in "pruned" mode, and the option documentation handed to llm4perf.
struct DatasetEntry {
  std::string name;
  std::shared_ptr<const MeasuredDataset> full;
  std::optional<ConfigSpace> pruned_space;
  std::vector<ConfigOption> docs;
  Json source;
};

namespace detail {

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? p : (base / path).string();
}

inline DatasetEntry synthetic_entry(const SynthSpec& spec, Json source) {
  DatasetEntry e;
  e.name = spec.system;
  e.full = std::make_shared<const MeasuredDataset>(synth_landscape(spec));
  std::map<std::string, OptionValue> pins;
  for (const auto& o : spec.space.options()) {
    if (!spec.sensitive.count(o.name)) pins.emplace(o.name, o.default_value ? *o.default_value : o.values.front());
  }
  e.pruned_space = prune_space(spec.space, spec.sensitive, pins);
  e.docs = synth_docs(spec);
  e.source = std::move(source);
  return e;
}

}  // namespace detail

/// Accepted forms: {"fixture": "lrzip"}, {"synth": {...}}, or
/// {"csv": path, "space": path, ["pruned_space": path], ["docs": path],
///  ["directions": {"metric": "maximize"}]}; "name" overrides the system name.
inline DatasetEntry dataset_from_json(const Json& j, const std::filesystem::path& base = {}) {
  DatasetEntry e;
  if (j.contains("fixture")) {
    const auto name = j["fixture"].get<std::string>();
    auto f = find_fixture(name);
    if (!f) throw Error(Errc::invalid_argument, "unknown fixture '" + name + "'");
    e = detail::synthetic_entry(f->spec, j);
  } else if (j.contains("synth")) {
    e = detail::synthetic_entry(SynthSpec::from_json(j["synth"]), j);
  } else if (j.contains("csv") && j.contains("space")) {
    std::map<std::string, Direction> dirs;
    if (j.contains("directions")) {
      for (const auto& [m, d] : j["directions"].items()) dirs.emplace(m, direction_from_string(d.get<std::string>()));
    }
    const std::string system = j.value("name", std::filesystem::path(j["csv"].get<std::string>()).stem().string());
    e.full = std::make_shared<const MeasuredDataset>(
        load_dataset(detail::resolve_path(j["csv"].get<std::string>(), base),
                     detail::resolve_path(j["space"].get<std::string>(), base), system, dirs));
    e.name = system;
    if (j.contains("pruned_space")) {
      e.pruned_space = read_space_file(detail::resolve_path(j["pruned_space"].get<std::string>(), base));
    }
    if (j.contains("docs")) {
      e.docs = parse_documentation(read_text_file(detail::resolve_path(j["docs"].get<std::string>(), base)));
    } else {
      e.docs = e.full->space->space().options();
    }
    e.source = j;
  } else {
    throw Error(Errc::invalid_argument, "dataset entry needs \"fixture\", \"synth\" or \"csv\" + \"space\"");
  }
  if (j.contains("name")) e.name = j["name"].get<std::string>();
  return e;
}

struct SamplerSpec {
  std::string kind;
  std::string label;  // column name in reports; defaults to kind
  Json params = Json::object();

  static SamplerSpec from_json(const Json& j) {
    SamplerSpec s;
    if (j.is_string()) {
      s.kind = j.get<std::string>();
    } else {
      s.kind = j.at("name").get<std::string>();
      s.params = j.value("params", Json::object());
      s.label = j.value("label", std::string());
    }
    if (std::find(sampler_kinds().begin(), sampler_kinds().end(), s.kind) == sampler_kinds().end()) {
      throw Error(Errc::invalid_argument, "unknown sampler '" + s.kind + "'");
    }
    if (s.label.empty()) s.label = s.kind;
    return s;
  }
};

struct ExperimentSpec {
  std::vector<DatasetEntry> datasets;
  std::vector<SamplerSpec> samplers;
  std::vector<std::size_t> budgets{10, 20, 30, 40, 50, 60, 70};
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> models{"gbt", "fnn"};
  models::GbtParams gbt;
  models::FnnParams fnn;
  std::vector<SpaceMode> space_modes{SpaceMode::full};
  std::string reference = "nsga3";
  std::string candidate = "llm4perf";
  double large_effect = stats::kLargeEffect;
  std::size_t threads = 0;  // 0: one per hardware thread
  bool keep_predictions = false;
  std::filesystem::path base_dir;  // relative paths inside sampler params resolve here
  std::optional<std::string> mock_override;

  void validate() const {
    if (datasets.empty()) throw Error(Errc::invalid_argument, "experiment has no datasets");
    if (samplers.empty()) throw Error(Errc::invalid_argument, "experiment has no samplers");
    if (budgets.empty()) throw Error(Errc::invalid_argument, "experiment has no budgets");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      if (budgets[i] == 0 || (i > 0 && budgets[i] <= budgets[i - 1])) {
        throw Error(Errc::invalid_argument, "budgets must be positive and strictly ascending");
      }
    }
    if (repetitions == 0) throw Error(Errc::invalid_argument, "repetitions must be at least 1");
    if (models.empty()) throw Error(Errc::invalid_argument, "experiment has no models");
    for (const auto& m : models) {
      if (m != "gbt" && m != "fnn") throw Error(Errc::invalid_argument, "unknown model '" + m + "'");
    }
    if (space_modes.empty()) throw Error(Errc::invalid_argument, "no space mode");
    std::set<std::string> labels;
    for (const auto& s : samplers) {
      if (!labels.insert(s.label).second) throw Error(Errc::invalid_argument, "duplicate sampler label '" + s.label + "'");
    }
    for (const auto& d : datasets) {
      for (auto mode : space_modes) {
        if (mode == SpaceMode::pruned && !d.pruned_space) {
          throw Error(Errc::invalid_argument, "dataset '" + d.name + "' has no pruned space");
        }
      }
    }
  }

  static ExperimentSpec from_json(const Json& j, const std::filesystem::path& base = {}) {
    if (!j.is_object()) throw Error(Errc::malformed_json, "experiment spec must be a JSON object");
    ExperimentSpec s;
    s.base_dir = base;
    for (const auto& d : j.at("datasets")) s.datasets.push_back(dataset_from_json(d, base));
    for (const auto& x : j.at("samplers")) s.samplers.push_back(SamplerSpec::from_json(x));
    if (j.contains("budgets")) s.budgets = j["budgets"].get<std::vector<std::size_t>>();
    s.repetitions = j.value("repetitions", s.repetitions);
    s.seed = j.value("seed", s.seed);
    if (j.contains("models")) s.models = j["models"].get<std::vector<std::string>>();
    if (j.contains("model_params")) {
      const auto& mp = j["model_params"];
      if (mp.contains("gbt")) s.gbt = models::GbtParams::from_json(mp["gbt"]);
      if (mp.contains("fnn")) s.fnn = models::FnnParams::from_json(mp["fnn"]);
    }
    if (j.contains("space_mode")) {
      s.space_modes.clear();
      const auto& m = j["space_mode"];
      if (m.is_string() && m.get<std::string>() == "both") {
        s.space_modes = {SpaceMode::full, SpaceMode::pruned};
      } else if (m.is_string()) {
        s.space_modes.push_back(space_mode_from_string(m.get<std::string>()));
      } else {
        for (const auto& x : m) s.space_modes.push_back(space_mode_from_string(x.get<std::string>()));
      }
    }
    s.reference = j.value("reference", s.reference);
    s.candidate = j.value("candidate", s.candidate);
    s.large_effect = j.value("large_effect", s.large_effect);
    s.threads = j.value("threads", s.threads);
    s.keep_predictions = j.value("keep_predictions", s.keep_predictions);
    s.validate();
    return s;
  }

  std::size_t metric_count(std::size_t dataset) const { return datasets.at(dataset).full->metrics.size(); }

  /// Number of downstream model fits the protocol performs.
  std::size_t training_runs() const {
    std::size_t metrics = 0;
    for (std::size_t d = 0; d < datasets.size(); ++d) metrics += metric_count(d);
    return metrics * space_modes.size() * samplers.size() * budgets.size() * repetitions * models.size();
  }
};

// ---------------------------------------------------------------------------
// Results

enum class CellStatus { ok, degenerate, failed };

constexpr std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::degenerate: return "degenerate";
    case CellStatus::failed: return "failed";
  }
  return "failed";
}

struct CellKey {
  std::string system;
  SpaceMode space_mode = SpaceMode::full;
  std::string metric;
  std::string model;
  std::size_t budget = 0;
  std::string sampler;

  /// Key of the report row this cell belongs to (everything but the sampler).
  auto row() const { return std::tie(system, space_mode, metric, model, budget); }
};

struct Repetition {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  CellStatus status = CellStatus::ok;
  std::optional<double> rmse;
  std::vector<std::size_t> train_rows;  // rows of the full dataset, in sampling order
  std::vector<double> predictions;      // over the test rows in ascending row order (if kept)
  std::string error;
};

struct Cell {
  CellKey key;
  CellStatus status = CellStatus::ok;
  std::vector<Repetition> reps;
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> improvement;  // percent, vs the reference sampler's mean
  std::optional<double> p_value;
  std::optional<double> delta;
  std::string markers;
  bool best = false;
  std::string error;

  std::vector<double> rmses() const {
    std::vector<double> v;
    for (const auto& r : reps) {
      if (r.rmse) v.push_back(*r.rmse);
    }
    return v;
  }
};

struct EvalReport {
  std::string reference;
  std::string candidate;
  double large_effect = stats::kLargeEffect;
  std::vector<std::string> sampler_order;
  std::vector<Cell> cells;

  const Cell* find(const CellKey& k) const {
    for (const auto& c : cells) {
      if (c.key.row() == k.row() && c.key.sampler == k.sampler) return &c;
    }
    return nullptr;
  }

  std::size_t failed_cells() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.status == CellStatus::failed; }));
  }
};

/// Improvement in percent of `mean` over `reference_mean` (lower RMSE is better).
inline double improvement_percent(double reference_mean, double mean) {
  return (reference_mean - mean) / reference_mean * 100.0;
}

/// Markers for a cell compared against the reference: "*" when p < 0.05, then
/// "M" or "L" for medium/large |delta|.
inline std::string significance_markers(std::optional<double> p, std::optional<double> delta,
                                        double large = stats::kLargeEffect) {
  std::string m;
  if (p && *p < 0.05) m += "*";
  if (delta) m += stats::effect_marker(*delta, large);
  return m;
}

/// Fills means, comparisons against the reference sampler and best-cell flags.
inline void annotate_report(EvalReport& report) {
  for (auto& c : report.cells) {
    c.improvement.reset();
    c.p_value.reset();
    c.delta.reset();
    c.markers.clear();
    c.best = false;
    const auto v = c.rmses();
    c.mean = c.status == CellStatus::ok && !v.empty() ? stats::mean(v) : std::numeric_limits<double>::quiet_NaN();
  }
  for (auto& c : report.cells) {
    if (c.status != CellStatus::ok || c.key.sampler == report.reference) continue;
    CellKey rk = c.key;
    rk.sampler = report.reference;
    const Cell* ref = report.find(rk);
    if (!ref || ref->status != CellStatus::ok) continue;
    if (ref->mean != 0.0) c.improvement = improvement_percent(ref->mean, c.mean);
    const auto a = ref->rmses();
    const auto b = c.rmses();
    c.delta = stats::cliffs_delta(a, b);
    if (a.size() == b.size() && a.size() >= 2) c.p_value = stats::wilcoxon_signed_rank(b, a);
    c.markers = significance_markers(c.p_value, c.delta, report.large_effect);
  }
  for (auto& c : report.cells) {
    if (c.status != CellStatus::ok) continue;
    bool best = true;
    for (const auto& o : report.cells) {
      if (&o != &c && o.status == CellStatus::ok && o.key.row() == c.key.row() && o.mean < c.mean) {
        best = false;
        break;
      }
    }
    c.best = best;
  }
}

// ---------------------------------------------------------------------------
// Running samplers

/// A sampler with its parameters parsed and, for llm4perf, its backend built.
struct PreparedSampler {
  SamplerSpec spec;
  BaselineParams baseline;
  mobo::BoParams bo;
  std::shared_ptr<const llm::ChatBackend> backend;
  llm::PipelineOptions pipeline;
  std::size_t batch_size = 7;
  std::size_t n_generators = 5;
};

inline PreparedSampler prepare_sampler(const SamplerSpec& s, const std::filesystem::path& base = {},
                                       const std::optional<std::string>& mock_override = std::nullopt) {
  PreparedSampler p;
  p.spec = s;
  const Json& j = s.params;
  if (s.kind == "genetic" || s.kind == "flash" || s.kind == "comsa" || s.kind == "nsga3") {
    p.baseline = BaselineParams::from_json(j);
  } else if (s.kind == "ehvi" || s.kind == "tsemo") {
    p.bo = mobo::BoParams::from_json(j);
  } else if (s.kind == "llm4perf") {
    p.batch_size = j.value("batch", p.batch_size);
    p.n_generators = j.value("generators", p.n_generators);
    if (p.batch_size == 0 || p.n_generators == 0) throw Error(Errc::invalid_argument, "batch and generators must be positive");
    if (j.contains("prompts")) {
      p.pipeline.prompts = llm::PromptSet::load(detail::resolve_path(j["prompts"].get<std::string>(), base));
    }
    p.pipeline.model_id = j.value("model", p.pipeline.model_id);
    p.pipeline.history_rows = j.value("history_rows", p.pipeline.history_rows);
    if (mock_override) {
      p.backend = std::make_shared<llm::MockBackend>(llm::MockScript::load(*mock_override));
    } else if (j.contains("mock")) {
      p.backend = std::make_shared<llm::MockBackend>(
          llm::MockScript::load(detail::resolve_path(j["mock"].get<std::string>(), base)));
    } else if (j.contains("live")) {
      p.backend = std::make_shared<llm::LiveBackend>(llm::LiveEndpoint::from_json(j["live"]));
    } else {
      throw Error(Errc::invalid_argument, "llm4perf needs a \"mock\" script or a \"live\" endpoint");
    }
  }
  return p;
}

/// Runs one sampler on `space` (full or pruned). llm4perf always starts from
/// the dataset's full space and documentation because pruning is its first
/// step. Returned configurations are full-space assignments.
inline SamplerOutcome run_sampler(const PreparedSampler& p, const EnumeratedSpace& space, const DatasetEntry& data,
                                  std::size_t k, std::uint64_t seed, const MeasurementOracle& oracle,
                                  const ObjectiveSpec& objectives) {
  const auto& kind = p.spec.kind;
  SamplerOutcome out;
  if (kind == "random") out = sample_random(space, k, seed);
  else if (kind == "nsbs") out = sample_nsbs(space, k, seed);
  else if (kind == "genetic") out = sample_genetic(space, k, seed, oracle, objectives, p.baseline);
  else if (kind == "flash") out = sample_flash(space, k, seed, oracle, objectives, p.baseline);
  else if (kind == "comsa") out = sample_comsa(space, k, seed, oracle, objectives, p.baseline);
  else if (kind == "nsga3") out = sample_nsga3(space, k, seed, oracle, objectives, p.baseline);
  else if (kind == "ehvi") out = mobo::sample_ehvi(space, k, seed, oracle, objectives, p.bo);
  else if (kind == "tsemo") out = mobo::sample_tsemo(space, k, seed, oracle, objectives, p.bo);
  else if (kind == "llm4perf") {
    llm::LlmSession session(*p.backend, p.pipeline);
    llm::SamplingBudget budget{k, std::min(p.batch_size, k), p.n_generators};
    out = llm::run_sampling_loop(data.full->space->space(), data.docs, budget, oracle, objectives, session, seed).outcome;
  } else {
    throw Error(Errc::invalid_argument, "unknown sampler '" + kind + "'");
  }
  for (auto& c : out.sampled) c = space.space().complete(c);
  return out;
}

// ---------------------------------------------------------------------------
// Protocol

namespace detail {

struct WorkUnit {
  std::size_t dataset = 0;
  SpaceMode mode = SpaceMode::full;
  std::size_t sampler = 0;
  std::size_t budget = 0;
  std::size_t rep = 0;
  std::optional<std::size_t> metric;  // single-objective samplers run per metric
};

struct UnitScore {
  std::size_t metric = 0;
  std::size_t model = 0;
  CellStatus status = CellStatus::ok;
  std::optional<double> rmse;
  std::vector<double> predictions;
};

struct UnitResult {
  bool failed = false;
  std::string error;
  std::vector<std::size_t> rows;
  std::vector<UnitScore> scores;
};

inline std::vector<double> fit_and_predict(const std::string& model, const models::FeatureMatrix& X,
                                           std::span<const double> y, const models::FeatureMatrix& T,
                                           const ExperimentSpec& spec, std::uint64_t seed) {
  if (model == "gbt") return models::train_gbt(X, y, spec.gbt).predict(T);
  models::FnnParams fp = spec.fnn;
  fp.seed = seed;
  return models::train_fnn(X, y, fp).predict(T);
}

inline UnitResult run_unit(const WorkUnit& u, const ExperimentSpec& spec, const std::vector<PreparedSampler>& samplers,
                           const std::vector<std::shared_ptr<const EnumeratedSpace>>& pruned) {
  UnitResult res;
  const DatasetEntry& data = spec.datasets[u.dataset];
  const MeasuredDataset& full = *data.full;
  const std::size_t k = spec.budgets[u.budget];
  const std::uint64_t seed = spec.seed + u.rep;
  try {
    const EnumeratedSpace& space = u.mode == SpaceMode::full ? *full.space : *pruned[u.dataset];
    const DatasetOracle oracle(data.full);
    const ObjectiveSpec objectives = u.metric ? full.metrics.only(*u.metric) : full.metrics;
    const SamplerOutcome out = run_sampler(samplers[u.sampler], space, data, k, seed, oracle, objectives);
    std::vector<bool> taken(full.size(), false);
    for (const auto& c : out.sampled) {
      auto row = full.row_of(c);
      if (!row) throw Error(Errc::invalid_configuration, "sampled configuration not in dataset: " + describe(c));
      if (taken[*row]) throw Error(Errc::invalid_configuration, "sampler returned a duplicate configuration");
      taken[*row] = true;
      res.rows.push_back(*row);
    }
    if (res.rows.size() != k) throw Error(Errc::invalid_configuration, "sampler returned the wrong number of configurations");

    std::vector<std::size_t> test;
    for (std::size_t r = 0; r < full.size(); ++r) {
      if (!taken[r]) test.push_back(r);
    }
    const auto X = detail::features_of(*full.space, res.rows);
    const auto T = detail::features_of(*full.space, test);
    std::vector<std::size_t> metrics;
    if (u.metric) metrics.push_back(*u.metric);
    else for (std::size_t j = 0; j < full.metrics.size(); ++j) metrics.push_back(j);
    for (auto j : metrics) {
      std::vector<double> y, truth;
      for (auto r : res.rows) y.push_back(full.value(r, j));
      for (auto r : test) truth.push_back(full.value(r, j));
      for (std::size_t m = 0; m < spec.models.size(); ++m) {
        UnitScore s;
        s.metric = j;
        s.model = m;
        if (test.empty()) {
          s.status = CellStatus::degenerate;
        } else {
          auto pred = fit_and_predict(spec.models[m], X, y, T, spec, mix_seed(seed, j * 16 + m));
          s.rmse = models::rmse(pred, truth);
          if (spec.keep_predictions) s.predictions = std::move(pred);
        }
        res.scores.push_back(std::move(s));
      }
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

}  // namespace detail

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// For every dataset, space mode, sampler, budget and repetition r (seed =
/// base + r): sample k configurations, train each model per metric on them,
/// and score RMSE on every other configuration of the full space. Failures are
/// confined to their cells.
inline EvalReport run_protocol(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
  spec.validate();
  std::vector<PreparedSampler> samplers;
  for (const auto& s : spec.samplers) samplers.push_back(prepare_sampler(s, spec.base_dir, spec.mock_override));
  std::vector<std::shared_ptr<const EnumeratedSpace>> pruned(spec.datasets.size());
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    if (spec.datasets[d].pruned_space) pruned[d] = std::make_shared<const EnumeratedSpace>(*spec.datasets[d].pruned_space);
  }

  std::vector<detail::WorkUnit> units;
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    for (auto mode : spec.space_modes) {
      for (std::size_t s = 0; s < samplers.size(); ++s) {
        const auto& kind = samplers[s].spec.kind;
        const bool per_metric = !is_multi_objective(kind) && !is_space_only(kind);
        for (std::size_t b = 0; b < spec.budgets.size(); ++b) {
          for (std::size_t r = 0; r < spec.repetitions; ++r) {
            if (per_metric) {
              for (std::size_t j = 0; j < spec.metric_count(d); ++j) units.push_back({d, mode, s, b, r, j});
            } else {
              units.push_back({d, mode, s, b, r, std::nullopt});
            }
          }
        }
      }
    }
  }

  std::vector<detail::UnitResult> results(units.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < units.size();) {
      results[i] = detail::run_unit(units[i], spec, samplers, pruned);
      const std::size_t n = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(n, units.size());
      }
    }
  };
  std::size_t n_threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, std::max<std::size_t>(units.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Reduce unit results into cells (single writer).
  EvalReport report;
  report.reference = spec.reference;
  report.candidate = spec.candidate;
  report.large_effect = spec.large_effect;
  for (const auto& s : spec.samplers) report.sampler_order.push_back(s.label);
  std::map<std::tuple<std::size_t, int, std::size_t, std::size_t, std::size_t, std::size_t>, std::size_t> index;
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    const auto& metrics = spec.datasets[d].full->metrics;
    for (auto mode : spec.space_modes) {
      for (std::size_t j = 0; j < metrics.size(); ++j) {
        for (std::size_t m = 0; m < spec.models.size(); ++m) {
          for (std::size_t b = 0; b < spec.budgets.size(); ++b) {
            for (std::size_t s = 0; s < samplers.size(); ++s) {
              Cell c;
              c.key = {spec.datasets[d].name, mode, metrics.metrics[j], spec.models[m], spec.budgets[b],
                       spec.samplers[s].label};
              c.reps.resize(spec.repetitions);
              for (std::size_t r = 0; r < spec.repetitions; ++r) {
                c.reps[r].index = r;
                c.reps[r].seed = spec.seed + r;
              }
              index[{d, static_cast<int>(mode), j, m, b, s}] = report.cells.size();
              report.cells.push_back(std::move(c));
            }
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    const auto& res = results[i];
    const auto& metrics = spec.datasets[u.dataset].full->metrics;
    for (std::size_t j = 0; j < metrics.size(); ++j) {
      if (u.metric && *u.metric != j) continue;
      for (std::size_t m = 0; m < spec.models.size(); ++m) {
        auto& rep = report.cells[index.at({u.dataset, static_cast<int>(u.mode), j, m, u.budget, u.sampler})].reps[u.rep];
        rep.train_rows = res.rows;
        if (res.failed) {
          rep.status = CellStatus::failed;
          rep.error = res.error;
          continue;
        }
        for (const auto& s : res.scores) {
          if (s.metric == j && s.model == m) {
            rep.status = s.status;
            rep.rmse = s.rmse;
            rep.predictions = s.predictions;
          }
        }
      }
    }
  }
  for (auto& c : report.cells) {
    for (const auto& r : c.reps) {
      if (r.status == CellStatus::failed) {
        c.status = CellStatus::failed;
        if (c.error.empty()) c.error = r.error;
      } else if (r.status == CellStatus::degenerate && c.status == CellStatus::ok) {
        c.status = CellStatus::degenerate;
      }
    }
  }
  annotate_report(report);
  return report;
}

}  // namespace perfsampler
