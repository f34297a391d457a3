// perf_sampler: command-line front end (prune, sample, evaluate, report,
// sweep, synth). Exit codes: 0 success, 1 runtime failure, 2 usage/spec error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "perfsampler/perfsampler.hpp"

namespace fs = std::filesystem;
using namespace perfsampler;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string spec;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string mock;
  bool verbose = false;
  // sweep only
  std::string axis;
  std::string values;
};

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::no_script_entry:
    case Errc::transport_error:
    case Errc::non_retryable_status:
    case Errc::empty_completion:
    case Errc::no_json_found:
    case Errc::schema_mismatch:
    case Errc::generation_exhausted:
    case Errc::factorization_failed:
    case Errc::oracle_failure:
    case Errc::dimension_mismatch:
    case Errc::invalid_configuration:
      return 1;
    default:
      return 2;
  }
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
  return path;
}

/// Checks that every path named in `keys` of `j` exists relative to `base`.
void require_referenced(const Json& j, std::initializer_list<const char*> keys, const fs::path& base) {
  for (const char* k : keys) {
    if (j.contains(k) && j[k].is_string()) {
      const auto p = detail::resolve_path(j[k].get<std::string>(), base);
      if (!fs::exists(p)) throw UsageError(std::string(k) + " file not found: " + p);
    }
  }
}

/// Output directory <out>/<command>-<hash>, where the hash covers the
/// command, spec text, effective seed, mock script and sweep settings.
class OutputDir {
 public:
  OutputDir(const Flags& f, const std::string& command, const std::string& spec_text, std::uint64_t seed) {
    std::uint64_t h = fnv1a(command);
    h = fnv1a("\n" + spec_text, h);
    h = fnv1a("\nseed=" + std::to_string(seed), h);
    if (!f.mock.empty()) h = fnv1a("\nmock=" + read_text_file(f.mock), h);
    if (!f.axis.empty()) h = fnv1a("\naxis=" + f.axis + "\nvalues=" + f.values, h);
    path_ = fs::path(f.out) / (command + "-" + hex16(h).substr(0, 12));
    created_ = !fs::exists(path_);
    fs::create_directories(path_);
  }

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const fs::path& path() const { return path_; }

  /// Removes what this run wrote if the directory did not exist before.
  void discard() const {
    std::error_code ec;
    if (created_) fs::remove_all(path_, ec);
  }

 private:
  fs::path path_;
  bool created_ = false;
};

/// Runs `body`, discarding partial outputs if it throws.
template <class F>
void guarded(const OutputDir& dir, F&& body) {
  try {
    body();
  } catch (...) {
    dir.discard();
    throw;
  }
}

std::uint64_t effective_seed(const Flags& f, const Json& spec, std::uint64_t fallback = 0) {
  const std::uint64_t s = f.seed ? *f.seed : spec.value("seed", fallback);
  std::cout << "seed: " << s << "\n";
  return s;
}

std::shared_ptr<const llm::ChatBackend> make_backend(const Json& llm_spec, const Flags& f, const fs::path& base) {
  if (!f.mock.empty()) return std::make_shared<llm::MockBackend>(llm::MockScript::load(require_file(f.mock, "--mock")));
  if (llm_spec.contains("mock")) {
    const auto p = detail::resolve_path(llm_spec["mock"].get<std::string>(), base);
    return std::make_shared<llm::MockBackend>(llm::MockScript::load(require_file(p, "mock script")));
  }
  if (llm_spec.contains("live")) return std::make_shared<llm::LiveBackend>(llm::LiveEndpoint::from_json(llm_spec["live"]));
  throw UsageError("no LLM backend: give --mock or an \"llm\" entry with \"mock\" or \"live\"");
}

// ---------------------------------------------------------------------------

int cmd_prune(const Flags& f) {
  const auto spec_path = require_file(f.spec, "--spec");
  const std::string text = read_text_file(spec_path);
  const Json spec = parse_json(text, spec_path);
  const fs::path base = fs::path(spec_path).parent_path();
  if (!spec.contains("space") || !spec.contains("docs")) throw UsageError("prune spec needs \"space\" and \"docs\"");
  require_referenced(spec, {"space", "docs"}, base);
  const std::uint64_t seed = effective_seed(f, spec);
  const ConfigSpace space = read_space_file(detail::resolve_path(spec["space"], base));
  const auto docs = parse_documentation(read_text_file(detail::resolve_path(spec["docs"], base)));
  const auto backend = make_backend(spec.value("llm", Json::object()), f, base);
  llm::PipelineOptions opts;
  if (spec.contains("prompts")) opts.prompts = llm::PromptSet::load(detail::resolve_path(spec["prompts"], base));

  OutputDir dir(f, "prune", text, seed);
  guarded(dir, [&] {
    llm::TranscriptSink sink(dir.file("transcript.jsonl"));
    llm::LlmSession session(*backend, opts, &sink);
    const auto result = llm::filter_options(space, docs, session);
    write_space_file(dir.file("pruned_space.json"), result.pruned);
    Json r;
    r["kept"] = std::vector<std::string>(result.kept.begin(), result.kept.end());
    r["rationale"] = result.rationale;
    r["warnings"] = session.warnings();
    write_json_file(dir.file("rationale.json"), r);
    std::cout << "kept " << result.kept.size() << " of " << space.size() << " options\n";
  });
  std::cout << "output: " << dir.path().string() << "\n";
  return 0;
}

int cmd_sample(const Flags& f) {
  const auto spec_path = require_file(f.spec, "--spec");
  const std::string text = read_text_file(spec_path);
  const Json spec = parse_json(text, spec_path);
  const fs::path base = fs::path(spec_path).parent_path();
  if (!spec.contains("dataset") || !spec.contains("sampler") || !spec.contains("budget")) {
    throw UsageError("sample spec needs \"dataset\", \"sampler\" and \"budget\"");
  }
  require_referenced(spec["dataset"], {"csv", "space", "docs", "pruned_space"}, base);
  const std::uint64_t seed = effective_seed(f, spec);
  const DatasetEntry data = dataset_from_json(spec["dataset"], base);
  const SamplerSpec sampler = SamplerSpec::from_json(spec["sampler"]);
  const auto budget = spec["budget"].get<std::uint64_t>();
  const SpaceMode mode = space_mode_from_string(spec.value("space_mode", std::string("full")));
  if (mode == SpaceMode::pruned && !data.pruned_space) throw UsageError("dataset has no pruned space");
  const EnumeratedSpace space = mode == SpaceMode::full ? *data.full->space : EnumeratedSpace(*data.pruned_space);
  require_budget(static_cast<std::size_t>(std::min<std::uint64_t>(budget, SIZE_MAX)),
                 sampler.kind == "llm4perf" ? data.full->space->size() : space.size());
  const std::size_t k = static_cast<std::size_t>(budget);

  ObjectiveSpec objectives = data.full->metrics;
  if (!is_multi_objective(sampler.kind) && !is_space_only(sampler.kind)) {
    const auto metric = spec.value("metric", objectives.metrics.front());
    objectives = objectives.only(data.full->metric_index(metric));
  }
  const DatasetOracle oracle(data.full);

  OutputDir dir(f, "sample", text, seed);
  guarded(dir, [&] {
    Json out;
    if (sampler.kind == "llm4perf") {
      const auto backend = make_backend(sampler.params, f, base);
      llm::PipelineOptions opts;
      if (sampler.params.contains("prompts")) {
        opts.prompts = llm::PromptSet::load(detail::resolve_path(sampler.params["prompts"], base));
      }
      llm::TranscriptSink sink(dir.file("transcript.jsonl"));
      llm::LlmSession session(*backend, opts, &sink);
      llm::SamplingBudget b{k, std::min<std::size_t>(sampler.params.value("batch", std::size_t{7}), k),
                            sampler.params.value("generators", std::size_t{5})};
      const auto result = llm::run_sampling_loop(data.full->space->space(), data.docs, b, oracle, objectives, session, seed);
      out = result.to_json();
      out["transcript"] = "transcript.jsonl";
      std::cout << "iterations:";
      for (auto s : result.batch_sizes()) std::cout << " " << s;
      std::cout << "\n";
    } else {
      const auto prepared = prepare_sampler(sampler, base);
      out = run_sampler(prepared, space, data, k, seed, oracle, objectives).to_json();
    }
    out["space_mode"] = std::string(to_string(mode));
    write_json_file(dir.file("outcome.json"), out);
    std::cout << "sampled " << out["configurations"].size() << " configurations\n";
  });
  std::cout << "output: " << dir.path().string() << "\n";
  return 0;
}

ExperimentSpec load_experiment(const Flags& f, const Json& j, const fs::path& base) {
  for (const auto& d : j.value("datasets", Json::array())) require_referenced(d, {"csv", "space", "docs", "pruned_space"}, base);
  ExperimentSpec spec = ExperimentSpec::from_json(j, base);
  if (f.seed) spec.seed = *f.seed;
  if (!f.mock.empty()) spec.mock_override = require_file(f.mock, "--mock");
  std::cout << "seed: " << spec.seed << "\n";
  return spec;
}

ProgressFn progress_for(const Flags& f) {
  if (!f.verbose) return {};
  return [](std::size_t done, std::size_t total) {
    std::cerr << "\r" << done << "/" << total << " units" << (done == total ? "\n" : "") << std::flush;
  };
}

void write_report(const OutputDir& dir, const EvalReport& report) {
  write_text_file(dir.file("report.csv"), report_csv(report));
  write_text_file(dir.file("report.txt"), report_table(report));
}

int cmd_evaluate(const Flags& f) {
  const auto spec_path = require_file(f.spec, "--spec");
  const std::string text = read_text_file(spec_path);
  const Json j = parse_json(text, spec_path);
  const ExperimentSpec spec = load_experiment(f, j, fs::path(spec_path).parent_path());
  std::cout << "training runs scheduled: " << spec.training_runs() << "\n";
  OutputDir dir(f, "evaluate", text, spec.seed);
  EvalReport report;
  guarded(dir, [&] {
    report = run_protocol(spec, progress_for(f));
    write_report(dir, report);
    write_text_file(dir.file("raw.jsonl"), report_jsonl(report));
  });
  std::cout << report_table(report);
  std::cout << "cells: " << report.cells.size() << ", failed: " << report.failed_cells() << "\n";
  for (const auto& c : report.cells) {
    if (c.status == CellStatus::failed && f.verbose) std::cerr << c.key.sampler << " @" << c.key.budget << ": " << c.error << "\n";
  }
  std::cout << "output: " << dir.path().string() << "\n";
  return !report.cells.empty() && report.failed_cells() == report.cells.size() ? 1 : 0;
}

int cmd_report(const Flags& f) {
  const auto spec_path = require_file(f.spec, "--spec");
  const std::string text = read_text_file(spec_path);
  const Json j = parse_json(text, spec_path);
  const fs::path base = fs::path(spec_path).parent_path();
  if (!j.contains("raw")) throw UsageError("report spec needs \"raw\" (a raw.jsonl from evaluate)");
  const auto raw = require_file(detail::resolve_path(j["raw"], base), "raw results");
  const auto report = report_from_jsonl(read_text_file(raw), j.value("reference", std::string("nsga3")),
                                        j.value("candidate", std::string("llm4perf")),
                                        j.value("large_effect", stats::kLargeEffect));
  OutputDir dir(f, "report", text + read_text_file(raw), 0);
  guarded(dir, [&] { write_report(dir, report); });
  std::cout << report_table(report) << "output: " << dir.path().string() << "\n";
  return 0;
}

std::vector<std::size_t> parse_values(const std::string& s) {
  std::vector<std::size_t> out;
  const auto dots = s.find("..");
  try {
    if (dots != std::string::npos) {
      const long lo = std::stol(s.substr(0, dots)), hi = std::stol(s.substr(dots + 2));
      if (lo <= 0 || hi < lo) throw UsageError("sweep range must be positive and ascending: " + s);
      for (long v = lo; v <= hi; ++v) out.push_back(static_cast<std::size_t>(v));
    } else {
      std::stringstream ss(s);
      for (std::string part; std::getline(ss, part, ',');) {
        const long v = std::stol(part);
        if (v <= 0) throw UsageError("sweep values must be positive integers: " + s);
        out.push_back(static_cast<std::size_t>(v));
      }
    }
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse sweep values: " + s);
  }
  return out;
}

int cmd_sweep(const Flags& f) {
  const auto spec_path = require_file(f.spec, "--spec");
  const std::string text = read_text_file(spec_path);
  Json j = parse_json(text, spec_path);
  const Json sweep = j.value("sweep", Json::object());
  const std::string axis = !f.axis.empty() ? f.axis : sweep.value("axis", std::string());
  if (axis != "n_candidates" && axis != "n_generators") throw UsageError("sweep axis must be n_candidates or n_generators");
  std::vector<std::size_t> values;
  if (!f.values.empty()) {
    values = parse_values(f.values);
  } else if (sweep.contains("values")) {
    for (const auto& v : sweep["values"]) {
      if (!v.is_number_integer() || v.get<long long>() <= 0) throw UsageError("sweep values must be positive integers");
      values.push_back(v.get<std::size_t>());
    }
  }
  if (values.empty()) throw UsageError("sweep needs values (--values 1..10 or \"sweep\": {\"values\": [...]})");
  ExperimentSpec spec = load_experiment(f, j, fs::path(spec_path).parent_path());
  std::vector<SamplerSpec> swept;
  for (const auto& s : spec.samplers) {
    if (s.kind == "llm4perf") swept.push_back(s);
  }
  if (swept.empty()) throw UsageError("sweep needs an llm4perf sampler in the spec");

  OutputDir dir(f, "sweep", text, spec.seed);
  guarded(dir, [&] {
    std::string grid = axis + ",sampler,system,space,metric,model,budget,mean_rmse,status\n";
    std::string dist = axis + ",sampler,system,space,metric,model,budget,repetition,rmse\n";
    for (auto v : values) {
      ExperimentSpec run = spec;
      run.samplers = swept;
      for (auto& s : run.samplers) s.params[axis == "n_candidates" ? "batch" : "generators"] = v;
      if (f.verbose) std::cerr << axis << " = " << v << "\n";
      const auto report = run_protocol(run, progress_for(f));
      for (const auto& c : report.cells) {
        const std::string prefix = std::to_string(v) + "," + detail::csv_cell(c.key.sampler) + "," +
                                   detail::csv_cell(c.key.system) + "," + std::string(to_string(c.key.space_mode)) +
                                   "," + detail::csv_cell(c.key.metric) + "," + c.key.model + "," +
                                   std::to_string(c.key.budget);
        grid += prefix + "," + (c.status == CellStatus::ok ? format_double(c.mean) : "") + "," +
                std::string(to_string(c.status)) + "\n";
        for (const auto& r : c.reps) {
          dist += prefix + "," + std::to_string(r.index) + "," + (r.rmse ? format_double(*r.rmse) : "") + "\n";
        }
      }
    }
    write_text_file(dir.file("sweep_grid.csv"), grid);
    write_text_file(dir.file("sweep_distributions.csv"), dist);
  });
  std::cout << "swept " << axis << " over " << values.size() << " values\noutput: " << dir.path().string() << "\n";
  return 0;
}

int cmd_synth(const Flags& f) {
  std::string text = "{}";
  if (!f.spec.empty()) text = read_text_file(require_file(f.spec, "--spec"));
  const Json j = parse_json(text, f.spec.empty() ? "default synth spec" : f.spec);
  SynthSpec spec;
  if (j.contains("fixture")) {
    auto fx = find_fixture(j["fixture"].get<std::string>());
    if (!fx) throw UsageError("unknown fixture '" + j["fixture"].get<std::string>() + "'");
    spec = fx->spec;
  } else {
    spec = SynthSpec::from_json(j.value("synth", j));
  }
  spec.seed = effective_seed(f, j, spec.seed);
  const Json mock = j.value("mock", Json::object());

  OutputDir dir(f, "synth", text, spec.seed);
  guarded(dir, [&] {
    const auto ds = synth_landscape(spec);
    write_space_file(dir.file("space.json"), spec.space);
    std::map<std::string, OptionValue> pins;
    for (const auto& o : spec.space.options()) {
      if (!spec.sensitive.count(o.name)) pins.emplace(o.name, o.default_value ? *o.default_value : o.values.front());
    }
    write_space_file(dir.file("pruned_space.json"), prune_space(spec.space, spec.sensitive, pins));
    Json docs = Json::array();
    for (const auto& d : synth_docs(spec)) {
      Json dj = option_to_json(d);
      dj.erase("performance_sensitive");
      docs.push_back(std::move(dj));
    }
    write_json_file(dir.file("docs.json"), docs);
    write_text_file(dir.file("measurements.csv"), dataset_to_csv(ds));
    write_json_file(dir.file("landscape.json"), spec.to_json());
    write_json_file(dir.file("mock.json"),
                    synth_mock_script(spec, mock.value("iterations", std::size_t{10}), mock.value("generators", std::size_t{5}),
                                      mock.value("batch", std::size_t{7}), mock.value("seed", spec.seed)));
    std::cout << spec.system << ": " << ds.size() << " configurations, " << spec.sensitive.size() << " of "
              << spec.space.size() << " options sensitive\n";
  });
  std::cout << "output: " << dir.path().string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Configuration sampling for performance modeling"};
  app.require_subcommand(1);
  Flags flags;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Command commands[] = {
      {"prune", "Drop options the LLM filter judges performance-insensitive", cmd_prune},
      {"sample", "Run one sampler on a dataset and write the sampled configurations", cmd_sample},
      {"evaluate", "Run the repeated sample/train/test protocol and write reports", cmd_evaluate},
      {"report", "Rebuild report tables from raw per-repetition results", cmd_report},
      {"sweep", "Repeat evaluate over N_candidates or N_generators values", cmd_sweep},
      {"synth", "Write a seeded synthetic system (space, docs, measurements, mock script)", cmd_synth},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--spec", flags.spec, "Spec JSON file");
    sub->add_option("--out", flags.out, "Output directory (a content-addressed subdirectory is created)");
    sub->add_option("--seed", flags.seed, "Override the spec's base seed");
    sub->add_option("--mock", flags.mock, "Mock chat script; replaces any configured LLM backend");
    sub->add_flag("--verbose,-v", flags.verbose, "Progress and diagnostics on stderr");
    if (std::string_view(c.name) == "sweep") {
      sub->add_option("--axis", flags.axis, "n_candidates or n_generators");
      sub->add_option("--values", flags.values, "Axis values: lo..hi or a comma list");
    }
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      return cmd->run(flags);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const Error& e) {
      std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
      return exit_code_for(e.code());
    } catch (const Json::exception& e) {
      std::cerr << "error: malformed spec: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
