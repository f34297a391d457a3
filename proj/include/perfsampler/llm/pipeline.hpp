#pragma once

#include <algorithm>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"
#include "perfsampler/llm/extract.hpp"
#include "perfsampler/llm/gateway.hpp"
#include "perfsampler/llm/prompts.hpp"
#include "perfsampler/llm/transcript.hpp"
#include "perfsampler/random.hpp"
#include "perfsampler/sampling/outcome.hpp"
#include "perfsampler/space/config_space.hpp"

namespace perfsampler::llm {

// ---------------------------------------------------------------------------
// Domain records

class MeasurementHistory {
 public:
  struct Record {
    Configuration configuration;
    MetricValues metrics;
    int iteration = 0;
  };

  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool contains(const Configuration& c) const { return seen_.count(c) > 0; }

  void add(Configuration c, MetricValues m, int iteration) {
    if (!records_.empty()) {
      if (iteration < records_.back().iteration) throw Error(Errc::invalid_argument, "iteration indices must not decrease");
      if (!same_keys(m, records_.front().metrics)) {
        throw Error(Errc::invalid_argument, "metric names differ from earlier records");
      }
    }
    if (!seen_.insert(c).second) throw Error(Errc::invalid_argument, "configuration already in history: " + describe(c));
    records_.push_back({std::move(c), std::move(m), iteration});
  }

 private:
  static bool same_keys(const MetricValues& a, const MetricValues& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
      if (ia->first != ib->first) return false;
    }
    return true;
  }

  std::vector<Record> records_;
  std::set<Configuration> seen_;
};

struct Anomaly {
  std::string subject;
  std::string note;
};

struct Hypothesis {
  std::string option;
  std::string sensitivity;  // low | high | interacting
  std::string note;
};

struct AnalysisDoc {
  std::string narrative;
  std::vector<Anomaly> anomalies;
  std::vector<Hypothesis> hypotheses;

  Json to_json() const {
    Json j;
    j["narrative"] = narrative;
    j["anomalies"] = Json::array();
    for (const auto& a : anomalies) j["anomalies"].push_back({{"subject", a.subject}, {"note", a.note}});
    j["hypotheses"] = Json::array();
    for (const auto& h : hypotheses) {
      j["hypotheses"].push_back({{"option", h.option}, {"sensitivity", h.sensitivity}, {"note", h.note}});
    }
    return j;
  }
};

struct FocusRegion {
  std::string option;
  std::vector<OptionValue> values;
};

struct StrategyDoc {
  std::string narrative;
  std::vector<FocusRegion> focus_regions;
  std::vector<std::pair<std::string, OptionValue>> deprioritized;
  int iteration = 1;

  Json to_json() const {
    Json j;
    j["iteration"] = iteration;
    j["narrative"] = narrative;
    j["focus_regions"] = Json::array();
    for (const auto& f : focus_regions) {
      Json vals = Json::array();
      for (const auto& v : f.values) vals.push_back(perfsampler::to_json(v));
      j["focus_regions"].push_back({{"option", f.option}, {"values", vals}});
    }
    j["deprioritized"] = Json::array();
    for (const auto& [o, v] : deprioritized) j["deprioritized"].push_back({{"option", o}, {"value", perfsampler::to_json(v)}});
    return j;
  }
};

struct SamplingBudget {
  std::size_t total = 0;
  std::size_t batch_size = 7;
  std::size_t n_generators = 5;

  void validate() const {
    if (total == 0 || batch_size == 0 || n_generators == 0) {
      throw Error(Errc::invalid_argument, "budget, batch size and generator count must be positive");
    }
    if (batch_size > total) throw Error(Errc::invalid_argument, "batch size exceeds the total budget");
  }
};

// ---------------------------------------------------------------------------
// Session: backends, prompts, transcript and call accounting

struct PipelineOptions {
  PromptSet prompts = PromptSet::builtin();
  double reasoning_temperature = 0.2;
  double generator_temperature = 0.8;
  std::size_t history_rows = 60;
  std::string model_id = "default";
};

struct CallCounts {
  std::size_t filter = 0;
  std::size_t analyzer = 0;
  std::size_t designer = 0;
  std::size_t generator = 0;         // successful generator calls
  std::size_t generator_failed = 0;  // gateway or extraction failures

  Json to_json() const {
    return Json{{"filter", filter}, {"analyzer", analyzer}, {"designer", designer}, {"generator", generator},
                {"generator_failed", generator_failed}};
  }
};

/// Everything the pipeline needs to talk to models. `generators` may name one
/// backend per generator; otherwise every generator uses `backend`.
class LlmSession {
 public:
  LlmSession(const ChatBackend& backend, PipelineOptions options = {}, TranscriptSink* sink = nullptr)
      : backend_(backend), options_(std::move(options)), sink_(sink) {}

  void set_generators(std::vector<const ChatBackend*> generators) { generators_ = std::move(generators); }

  const PipelineOptions& options() const { return options_; }
  const ChatBackend& backend() const { return backend_; }
  const ChatBackend& generator_backend(std::size_t g) const {
    return g < generators_.size() && generators_[g] ? *generators_[g] : backend_;
  }

  ChatRequest request(RoleTag role, int iteration, const std::map<std::string, std::string>& vars) const {
    const auto& t = options_.prompts.for_role(role);
    ChatRequest req;
    req.role = role;
    req.iteration = iteration;
    req.model_id = options_.model_id;
    req.temperature = role == RoleTag::generator ? options_.generator_temperature : options_.reasoning_temperature;
    req.messages.push_back({Speaker::system, render(t.system, vars)});
    req.messages.push_back({Speaker::user, render(t.user, vars)});
    return req;
  }

  /// Sends, logs and counts one sequential call.
  ChatResponse call(const ChatRequest& req) {
    ChatResponse resp = complete_chat(backend_, req);
    log(req, resp);
    bump(req.role);
    return resp;
  }

  void log(const ChatRequest& req, const ChatResponse& resp) {
    if (sink_) sink_->append(req, resp);
  }

  void bump(RoleTag role, bool failed = false) {
    std::lock_guard lock(mutex_);
    switch (role) {
      case RoleTag::filter: ++counts_.filter; break;
      case RoleTag::analyzer: ++counts_.analyzer; break;
      case RoleTag::designer: ++counts_.designer; break;
      case RoleTag::generator:
      case RoleTag::voter_aux: ++(failed ? counts_.generator_failed : counts_.generator); break;
    }
  }

  void warn(std::string message) {
    std::lock_guard lock(mutex_);
    warnings_.push_back(std::move(message));
  }

  CallCounts counts() const {
    std::lock_guard lock(mutex_);
    return counts_;
  }
  std::vector<std::string> warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
  }

 private:
  const ChatBackend& backend_;
  std::vector<const ChatBackend*> generators_;
  PipelineOptions options_;
  TranscriptSink* sink_;
  mutable std::mutex mutex_;
  CallCounts counts_;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Prompt rendering helpers

inline std::string render_space(const ConfigSpace& space, const std::vector<ConfigOption>* docs = nullptr) {
  std::ostringstream s;
  for (const auto& o : space.options()) {
    s << "- " << o.name << " (" << to_string(o.kind) << "): values [";
    for (std::size_t i = 0; i < o.values.size(); ++i) s << (i ? ", " : "") << to_text(o.values[i]);
    s << "]";
    std::string desc = o.description;
    std::optional<OptionValue> def = o.default_value;
    if (docs) {
      for (const auto& d : *docs) {
        if (d.name != o.name) continue;
        if (!d.description.empty()) desc = d.description;
        if (d.default_value) def = d.default_value;
      }
    }
    if (def) s << "; default " << to_text(*def);
    if (!desc.empty()) s << "\n  " << desc;
    s << "\n";
  }
  if (!space.dropped().empty()) {
    s << "Fixed (not tunable here):";
    for (const auto& [n, v] : space.dropped()) s << " " << n << "=" << to_text(v);
    s << "\n";
  }
  std::string out = s.str();
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

/// Aligned plain-text table of the most recent `max_rows` records.
inline std::string render_history(const MeasurementHistory& history, const ConfigSpace& space,
                                  const std::vector<std::string>& metrics, std::size_t max_rows) {
  if (history.empty()) return "(none)";
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"iter"};
  for (const auto& o : space.options()) header.push_back(o.name);
  for (const auto& m : metrics) header.push_back(m);
  rows.push_back(header);
  const auto& recs = history.records();
  const std::size_t start = recs.size() > max_rows ? recs.size() - max_rows : 0;
  for (std::size_t r = start; r < recs.size(); ++r) {
    std::vector<std::string> row{std::to_string(recs[r].iteration)};
    for (const auto& o : space.options()) {
      auto it = recs[r].configuration.assignments.find(o.name);
      row.push_back(it == recs[r].configuration.assignments.end() ? "?" : to_text(it->second));
    }
    for (const auto& m : metrics) {
      auto it = recs[r].metrics.find(m);
      row.push_back(it == recs[r].metrics.end() ? "?" : format_double(it->second));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  if (start > 0) out += "(" + std::to_string(start) + " older rows omitted)\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) line += "  ";
      line += rows[r][c];
      if (c + 1 < rows[r].size()) line.append(width[c] - rows[r][c].size(), ' ');
    }
    out += line;
    if (r + 1 < rows.size()) out += "\n";
  }
  return out;
}

inline std::string render_strategy(const StrategyDoc& s) {
  std::string out = s.narrative;
  if (!s.focus_regions.empty()) {
    out += "\nFocus:";
    for (const auto& f : s.focus_regions) {
      out += " " + f.option + " in {";
      for (std::size_t i = 0; i < f.values.size(); ++i) out += (i ? ", " : "") + to_text(f.values[i]);
      out += "};";
    }
  }
  if (!s.deprioritized.empty()) {
    out += "\nFix:";
    for (const auto& [o, v] : s.deprioritized) out += " " + o + "=" + to_text(v) + ";";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase 1: option filter

struct FilterResult {
  ConfigSpace pruned;
  std::set<std::string> kept;
  Json rationale;  // option -> {"decision": keep|drop, "reason": text}
};

/// One filter call over all option descriptions. If the answer carries a
/// "drop" list only those options are dropped; otherwise options missing from
/// "keep" are dropped. A keep list naming no real option keeps everything.
inline FilterResult filter_options(const ConfigSpace& space, const std::vector<ConfigOption>& docs, LlmSession& session) {
  for (const auto& o : space.options()) {
    const bool documented = std::any_of(docs.begin(), docs.end(), [&](const ConfigOption& d) { return d.name == o.name; });
    if (!documented) throw Error(Errc::missing_documentation, "option '" + o.name + "' has no documentation entry");
  }
  const auto req = session.request(RoleTag::filter, 0, {{"space", render_space(space, &docs)}});
  const auto resp = session.call(req);
  const Schema schema{{{"keep", JsonKind::string_list, true},
                       {"drop", JsonKind::string_list, false},
                       {"rationale", JsonKind::object, false}}};
  const Json answer = extract_structured(resp.text, schema);

  auto known = [&](const std::string& name) { return space.find(name).has_value(); };
  std::set<std::string> keep_named;
  for (const auto& n : answer["keep"]) {
    const auto name = n.get<std::string>();
    if (known(name)) keep_named.insert(name);
    else session.warn("filter: ignoring unknown option '" + name + "' in keep list");
  }
  std::set<std::string> keep;
  if (answer.contains("drop")) {
    std::set<std::string> drop;
    for (const auto& n : answer["drop"]) {
      const auto name = n.get<std::string>();
      if (!known(name)) session.warn("filter: ignoring unknown option '" + name + "' in drop list");
      else if (keep_named.count(name)) session.warn("filter: '" + name + "' both kept and dropped; keeping it");
      else drop.insert(name);
    }
    for (const auto& o : space.options()) {
      if (!drop.count(o.name)) keep.insert(o.name);
    }
  } else if (keep_named.empty()) {
    session.warn("filter: keep list names no known option; keeping every option");
    for (const auto& o : space.options()) keep.insert(o.name);
  } else {
    keep = keep_named;
  }

  std::map<std::string, OptionValue> defaults;
  FilterResult result{space, keep, Json::object()};
  for (const auto& o : space.options()) {
    std::string reason;
    if (answer.contains("rationale") && answer["rationale"].contains(o.name) && answer["rationale"][o.name].is_string()) {
      reason = answer["rationale"][o.name].get<std::string>();
    }
    result.rationale[o.name] = Json{{"decision", keep.count(o.name) ? "keep" : "drop"}, {"reason", reason}};
    if (keep.count(o.name)) continue;
    std::optional<OptionValue> def;
    for (const auto& d : docs) {
      if (d.name == o.name && d.default_value && o.find_value(*d.default_value)) def = d.default_value;
    }
    if (!def && o.default_value) def = o.default_value;
    defaults.emplace(o.name, def ? *def : o.values.front());
    result.rationale[o.name]["pinned"] = perfsampler::to_json(defaults.at(o.name));
  }
  result.pruned = prune_space(space, keep, defaults);
  return result;
}

// ---------------------------------------------------------------------------
// Phase 2: analysis and strategy

namespace detail {

// Option names mentioned in a subject such as "algorithm=-g, -w=1".
inline std::vector<std::string> subject_options(const std::string& subject) {
  std::vector<std::string> names;
  std::size_t start = 0;
  while (start < subject.size()) {
    auto eq = subject.find('=', start);
    if (eq == std::string::npos) break;
    auto name_begin = subject.find_last_of(", ;", eq);
    name_begin = name_begin == std::string::npos || name_begin < start ? start : name_begin + 1;
    std::string name = subject.substr(name_begin, eq - name_begin);
    while (!name.empty() && name.front() == ' ') name.erase(name.begin());
    names.push_back(name);
    auto next = subject.find_first_of(",;", eq);
    if (next == std::string::npos) break;
    start = next + 1;
  }
  return names;
}

inline std::string string_field(const Json& j, const char* key) {
  return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : std::string();
}

}  // namespace detail

inline AnalysisDoc analyze_trends(const MeasurementHistory& history, const ObjectiveSpec& objectives,
                                  const ConfigSpace& space, int iteration, LlmSession& session) {
  if (history.empty()) throw Error(Errc::invalid_argument, "trend analysis needs at least one measurement");
  const auto req = session.request(
      RoleTag::analyzer, iteration,
      {{"space", render_space(space)},
       {"history", render_history(history, space, objectives.metrics, session.options().history_rows)},
       {"iteration", std::to_string(iteration)}});
  const auto resp = session.call(req);
  const Schema schema{{{"narrative", JsonKind::string, true},
                       {"anomalies", JsonKind::array, false},
                       {"hypotheses", JsonKind::array, false}}};
  const Json answer = extract_structured(resp.text, schema);
  AnalysisDoc doc;
  doc.narrative = answer["narrative"].get<std::string>();
  auto known = [&](const std::string& n) { return space.find(n).has_value(); };
  if (answer.contains("anomalies")) {
    for (const auto& a : answer["anomalies"]) {
      if (!a.is_object()) continue;
      Anomaly an{detail::string_field(a, "subject"), detail::string_field(a, "note")};
      bool ok = !an.subject.empty();
      for (const auto& n : detail::subject_options(an.subject)) ok = ok && known(n);
      if (ok) doc.anomalies.push_back(std::move(an));
      else session.warn("analyzer: dropping anomaly about unknown option(s): " + an.subject);
    }
  }
  if (answer.contains("hypotheses")) {
    for (const auto& h : answer["hypotheses"]) {
      if (!h.is_object()) continue;
      Hypothesis hy{detail::string_field(h, "option"), detail::string_field(h, "sensitivity"),
                    detail::string_field(h, "note")};
      if (!known(hy.option)) {
        session.warn("analyzer: dropping hypothesis about unknown option '" + hy.option + "'");
        continue;
      }
      if (hy.sensitivity != "low" && hy.sensitivity != "high" && hy.sensitivity != "interacting") {
        session.warn("analyzer: dropping hypothesis with sensitivity '" + hy.sensitivity + "'");
        continue;
      }
      doc.hypotheses.push_back(std::move(hy));
    }
  }
  return doc;
}

inline StrategyDoc design_strategy(const std::optional<AnalysisDoc>& analysis, const ConfigSpace& space,
                                   std::size_t remaining, int iteration, LlmSession& session) {
  if (remaining == 0) throw Error(Errc::invalid_argument, "no budget left to plan for");
  std::string context;
  if (!analysis) {
    context = "No measurements exist yet. Propose a coverage-first exploration strategy that spreads the first batch "
              "across the option values, including extreme values of numeric options.";
  } else {
    context = "Latest analysis of the measurements:\n" + analysis->to_json().dump(2) +
              "\nRefine the strategy: target under-explored and high-impact regions, and fix options that look "
              "insensitive.";
  }
  const auto req = session.request(RoleTag::designer, iteration,
                                   {{"space", render_space(space)},
                                    {"analysis", context},
                                    {"budget", std::to_string(remaining)},
                                    {"iteration", std::to_string(iteration)}});
  const auto resp = session.call(req);
  const Schema schema{{{"narrative", JsonKind::string, true},
                       {"focus_regions", JsonKind::array, false},
                       {"deprioritized", JsonKind::array, false}}};
  const Json answer = extract_structured(resp.text, schema);
  StrategyDoc s;
  s.iteration = iteration;
  s.narrative = answer["narrative"].get<std::string>();
  std::set<std::string> used;
  if (answer.contains("focus_regions")) {
    for (const auto& f : answer["focus_regions"]) {
      if (!f.is_object()) continue;
      const std::string name = detail::string_field(f, "option");
      auto oi = space.find(name);
      if (!oi) {
        session.warn("designer: dropping focus region on unknown option '" + name + "'");
        continue;
      }
      const auto& opt = space.options()[*oi];
      FocusRegion region{name, {}};
      if (f.contains("values") && f["values"].is_array()) {
        for (const auto& v : f["values"]) {
          if (auto vi = opt.match_json(v)) {
            if (std::find(region.values.begin(), region.values.end(), opt.values[*vi]) == region.values.end()) {
              region.values.push_back(opt.values[*vi]);
            }
          } else {
            session.warn("designer: dropping inadmissible value " + v.dump() + " for '" + name + "'");
          }
        }
      }
      if (region.values.empty() || !used.insert(name).second) {
        session.warn("designer: ignoring empty or repeated focus region on '" + name + "'");
        continue;
      }
      s.focus_regions.push_back(std::move(region));
    }
  }
  if (answer.contains("deprioritized")) {
    for (const auto& d : answer["deprioritized"]) {
      if (!d.is_object()) continue;
      const std::string name = detail::string_field(d, "option");
      auto oi = space.find(name);
      if (!oi || !d.contains("value")) {
        session.warn("designer: dropping deprioritized entry for '" + name + "'");
        continue;
      }
      auto vi = space.options()[*oi].match_json(d["value"]);
      if (!vi || !used.insert(name).second) {
        session.warn("designer: dropping inadmissible or repeated pin for '" + name + "'");
        continue;
      }
      s.deprioritized.emplace_back(name, space.options()[*oi].values[*vi]);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Phase 3: generation and voting

namespace detail {

// Maps a generator's JSON object onto the active space. Pinned options of a
// pruned space may be echoed back and are ignored; options left out are
// filled from the strategy's pins when possible.
inline std::optional<Configuration> candidate_from_json(const Json& j, const ConfigSpace& space,
                                                        const StrategyDoc& strategy) {
  if (!j.is_object()) return std::nullopt;
  Configuration c;
  for (const auto& [key, value] : j.items()) {
    auto oi = space.find(key);
    if (!oi) {
      const bool pinned = std::any_of(space.dropped().begin(), space.dropped().end(),
                                      [&](const auto& p) { return p.first == key; });
      if (pinned) continue;
      return std::nullopt;
    }
    const auto& opt = space.options()[*oi];
    auto vi = opt.match_json(value);
    if (!vi) return std::nullopt;
    c.assignments[opt.name] = opt.values[*vi];
  }
  for (const auto& [name, value] : strategy.deprioritized) c.assignments.emplace(name, value);
  if (!validate_configuration(space, c).valid()) return std::nullopt;
  return c;
}

}  // namespace detail

/// Asks every generator (concurrently) for `n` configurations. Invalid
/// candidates are discarded; a failing generator contributes an empty list.
/// Calls are logged in generator order once all have returned.
inline std::vector<std::vector<Configuration>> generate_candidates(const StrategyDoc& strategy,
                                                                   const ConfigSpace& space, std::size_t n,
                                                                   std::size_t n_generators,
                                                                   const MeasurementHistory& history,
                                                                   const ObjectiveSpec& objectives,
                                                                   LlmSession& session) {
  if (n == 0 || n_generators == 0) throw Error(Errc::invalid_argument, "need n >= 1 and at least one generator");
  const std::string space_text = render_space(space);
  const std::string history_text =
      render_history(history, space, objectives.metrics, session.options().history_rows);
  const std::string strategy_text = render_strategy(strategy);
  std::vector<ChatRequest> requests;
  for (std::size_t g = 0; g < n_generators; ++g) {
    requests.push_back(session.request(RoleTag::generator, strategy.iteration,
                                       {{"space", space_text},
                                        {"strategy", strategy_text},
                                        {"history", history_text},
                                        {"n", std::to_string(n)},
                                        {"generator", std::to_string(g + 1)},
                                        {"iteration", std::to_string(strategy.iteration)}}));
  }
  struct Reply {
    std::optional<ChatResponse> response;
    std::string error;
  };
  std::vector<std::future<Reply>> futures;
  for (std::size_t g = 0; g < n_generators; ++g) {
    futures.push_back(std::async(std::launch::async, [&, g]() {
      Reply r;
      try {
        r.response = complete_chat(session.generator_backend(g), requests[g]);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      return r;
    }));
  }
  const Schema schema{{{"configurations", JsonKind::array, true}}};
  std::vector<std::vector<Configuration>> lists(n_generators);
  for (std::size_t g = 0; g < n_generators; ++g) {
    Reply r = futures[g].get();
    if (!r.response) {
      session.bump(RoleTag::generator, true);
      session.warn("generator #" + std::to_string(g + 1) + " failed: " + r.error);
      continue;
    }
    session.log(requests[g], *r.response);
    Json answer;
    try {
      answer = extract_structured(r.response->text, schema);
    } catch (const Error& e) {
      session.bump(RoleTag::generator, true);
      session.warn("generator #" + std::to_string(g + 1) + " answer unusable: " + e.what());
      continue;
    }
    session.bump(RoleTag::generator);
    std::set<Configuration> seen;
    for (const auto& cj : answer["configurations"]) {
      auto c = detail::candidate_from_json(cj, space, strategy);
      if (!c) {
        session.warn("generator #" + std::to_string(g + 1) + ": discarding invalid candidate " + cj.dump());
        continue;
      }
      if (seen.insert(*c).second) lists[g].push_back(std::move(*c));
    }
  }
  const bool any = std::any_of(lists.begin(), lists.end(), [](const auto& l) { return !l.empty(); });
  if (!any) throw Error(Errc::generation_exhausted, "no generator produced a valid candidate");
  return lists;
}

struct Voted {
  Configuration configuration;
  std::size_t votes = 0;
};

/// Frequency vote across generator lists. Ties go to the candidate seen first
/// (earlier generator, then earlier position). Already-measured
/// configurations are excluded.
inline std::vector<Voted> vote_candidates(const std::vector<std::vector<Configuration>>& lists,
                                          const std::set<Configuration>& already_measured, std::size_t k) {
  if (k == 0) throw Error(Errc::invalid_argument, "vote size must be positive");
  struct Tally {
    std::size_t votes = 0;
    std::size_t first_generator = 0;
    std::size_t first_position = 0;
  };
  std::map<Configuration, Tally> tally;
  for (std::size_t g = 0; g < lists.size(); ++g) {
    std::set<Configuration> in_list;
    for (std::size_t p = 0; p < lists[g].size(); ++p) {
      const auto& c = lists[g][p];
      if (already_measured.count(c) || !in_list.insert(c).second) continue;
      auto [it, fresh] = tally.try_emplace(c, Tally{0, g, p});
      ++it->second.votes;
    }
  }
  std::vector<std::pair<Configuration, Tally>> ranked(tally.begin(), tally.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.votes != b.second.votes) return a.second.votes > b.second.votes;
    if (a.second.first_generator != b.second.first_generator) return a.second.first_generator < b.second.first_generator;
    return a.second.first_position < b.second.first_position;
  });
  std::vector<Voted> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back({ranked[i].first, ranked[i].second.votes});
  return out;
}

// ---------------------------------------------------------------------------
// The loop

struct IterationRecord {
  int iteration = 0;
  std::optional<AnalysisDoc> analysis;
  StrategyDoc strategy;
  std::vector<std::size_t> generator_list_sizes;
  std::vector<Configuration> batch;  // active-space form
  std::size_t voted = 0;
  std::size_t topped_up = 0;

  Json to_json() const {
    Json j;
    j["iteration"] = iteration;
    j["analysis"] = analysis ? analysis->to_json() : Json(nullptr);
    j["strategy"] = strategy.to_json();
    j["generator_list_sizes"] = generator_list_sizes;
    j["batch"] = Json::array();
    for (const auto& c : batch) j["batch"].push_back(configuration_to_json(c));
    j["voted"] = voted;
    j["topped_up"] = topped_up;
    return j;
  }
};

struct LoopResult {
  SamplerOutcome outcome;  // full-space configurations in measurement order
  FilterResult filter;
  MeasurementHistory history;
  std::vector<IterationRecord> iterations;
  CallCounts calls;
  std::vector<std::string> warnings;

  std::vector<std::size_t> batch_sizes() const {
    std::vector<std::size_t> s;
    for (const auto& it : iterations) s.push_back(it.batch.size());
    return s;
  }

  Json to_json() const {
    Json j = outcome.to_json();
    j["iterations"] = Json::array();
    for (const auto& it : iterations) j["iterations"].push_back(it.to_json());
    j["pruned_space"] = space_to_json(filter.pruned);
    j["filter_rationale"] = filter.rationale;
    j["calls"] = calls.to_json();
    j["warnings"] = warnings;
    return j;
  }
};

/// Prunes once, then repeats analyse -> design -> generate -> vote -> measure
/// until `budget.total` distinct configurations are measured. Shortfalls in a
/// batch are filled with uniformly random unmeasured configurations.
inline LoopResult run_sampling_loop(const ConfigSpace& space, const std::vector<ConfigOption>& docs,
                                    const SamplingBudget& budget, const MeasurementOracle& oracle,
                                    const ObjectiveSpec& objectives, LlmSession& session, std::uint64_t seed) {
  budget.validate();
  objectives.validate();
  LoopResult result{{"llm4perf", seed, {}, {}}, filter_options(space, docs, session), {}, {}, {}, {}};
  const ConfigSpace& active = result.filter.pruned;
  const EnumeratedSpace enumerated(active);
  require_budget(budget.total, enumerated.size());
  Rng rng(seed);

  std::set<Configuration> measured;
  std::optional<AnalysisDoc> analysis;
  for (int iteration = 1; measured.size() < budget.total; ++iteration) {
    const std::size_t remaining = budget.total - measured.size();
    const std::size_t k = std::min(budget.batch_size, remaining);
    IterationRecord rec;
    rec.iteration = iteration;
    if (!result.history.empty()) {
      analysis = analyze_trends(result.history, objectives, active, iteration, session);
      rec.analysis = analysis;
    }
    rec.strategy = design_strategy(analysis, active, remaining, iteration, session);

    std::vector<Voted> voted;
    try {
      const auto lists = generate_candidates(rec.strategy, active, k, budget.n_generators, result.history,
                                             objectives, session);
      for (const auto& l : lists) rec.generator_list_sizes.push_back(l.size());
      voted = vote_candidates(lists, measured, k);
    } catch (const Error& e) {
      if (e.code() != Errc::generation_exhausted) throw;
      session.warn("iteration " + std::to_string(iteration) + ": " + e.what() + "; using random configurations");
    }
    for (auto& v : voted) rec.batch.push_back(std::move(v.configuration));
    rec.voted = rec.batch.size();

    if (rec.batch.size() < k) {
      std::set<Configuration> taken = measured;
      taken.insert(rec.batch.begin(), rec.batch.end());
      std::vector<std::size_t> open;
      for (std::size_t i = 0; i < enumerated.size(); ++i) {
        if (!taken.count(enumerated.configuration(i))) open.push_back(i);
      }
      for (auto pos : rng.sample_indices(open.size(), k - rec.batch.size())) {
        rec.batch.push_back(enumerated.configuration(open[pos]));
        ++rec.topped_up;
      }
    }

    for (const auto& c : rec.batch) {
      const Configuration full = active.complete(c);
      MetricValues m;
      try {
        m = oracle.measure(full);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        throw Error(Errc::oracle_failure, e.what());
      }
      measured.insert(c);
      result.history.add(c, std::move(m), iteration);
      result.outcome.sampled.push_back(full);
    }
    result.outcome.notes.push_back(rec.to_json());
    result.iterations.push_back(std::move(rec));
  }
  result.calls = session.counts();
  result.warnings = session.warnings();
  return result;
}

}  // namespace perfsampler::llm
