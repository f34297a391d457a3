#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"
#include "perfsampler/llm/gateway.hpp"

namespace perfsampler::llm {

/// A role prompt: system text plus a user template. Placeholders are written
/// {name}; unknown placeholders are left untouched.
struct PromptTemplate {
  std::string system;
  std::string user;

  /// Parses the on-disk form: a "[system]" line, its text, a "[user]" line,
  /// then the user template.
  static PromptTemplate parse(std::string_view text, std::string_view origin = "prompt") {
    const auto sys = text.find("[system]\n");
    const auto usr = text.find("\n[user]\n");
    if (sys != 0 || usr == std::string_view::npos) {
      throw Error(Errc::malformed_json, std::string(origin) + ": expected [system] and [user] sections");
    }
    PromptTemplate t;
    t.system = std::string(text.substr(9, usr - 9));
    t.user = std::string(text.substr(usr + 8));
    while (!t.user.empty() && t.user.back() == '\n') t.user.pop_back();
    return t;
  }

  std::string serialize() const { return "[system]\n" + system + "\n[user]\n" + user + "\n"; }
};

inline std::string render(std::string_view tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  for (std::size_t i = 0; i < tpl.size();) {
    if (tpl[i] == '{') {
      const auto close = tpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tpl[i++];
  }
  return out;
}

namespace defaults {

inline constexpr std::string_view filter = R"([system]
You are a software performance engineer. Given the documentation of a system's configuration options, decide which options can change its performance (execution time, throughput, latency, memory, output quality) and which cannot.
[user]
Configuration options:
{space}

Keep every option that plausibly affects performance; drop only options whose documentation shows they have no performance effect.
Answer with a JSON object:
{"keep": ["<option>", ...], "drop": ["<option>", ...], "rationale": {"<option>": "<one sentence>"}}
)";

inline constexpr std::string_view analyzer = R"([system]
You analyse performance measurements of a configurable software system and explain which options drive each metric.
[user]
Configuration space:
{space}

Measurements so far (iteration {iteration}):
{history}

Point out anomalous configurations, trade-offs between metrics, and how sensitive each option looks.
Answer with a JSON object:
{"narrative": "<summary>", "anomalies": [{"subject": "<option>=<value>", "note": "<what is unusual>"}], "hypotheses": [{"option": "<option>", "sensitivity": "low|high|interacting", "note": "<why>"}]}
)";

inline constexpr std::string_view designer = R"([system]
You plan which configurations of a software system to measure next so that a performance model trained on them is as accurate as possible.
[user]
Configuration space:
{space}

Iteration {iteration}; {budget} measurements remain.
{analysis}

Answer with a JSON object:
{"narrative": "<plan in plain language>", "focus_regions": [{"option": "<option>", "values": [<values>]}], "deprioritized": [{"option": "<option>", "value": <pinned value>}]}
)";

inline constexpr std::string_view generator = R"([system]
You are configuration generator #{generator}. You turn a sampling strategy into concrete configurations of a software system.
[user]
Configuration space:
{space}

Strategy for iteration {iteration}:
{strategy}

Already measured (do not repeat these):
{history}

Propose {n} distinct configurations that follow the strategy. Use only the listed options and values.
Answer with a JSON object:
{"configurations": [{"<option>": <value>, ...}, ...]}
)";

}  // namespace defaults

struct PromptSet {
  PromptTemplate filter;
  PromptTemplate analyzer;
  PromptTemplate designer;
  PromptTemplate generator;

  static PromptSet builtin() {
    return {PromptTemplate::parse(defaults::filter, "filter"), PromptTemplate::parse(defaults::analyzer, "analyzer"),
            PromptTemplate::parse(defaults::designer, "designer"),
            PromptTemplate::parse(defaults::generator, "generator")};
  }

  /// Loads <dir>/{filter,analyzer,designer,generator}.txt.
  static PromptSet load(const std::filesystem::path& dir) {
    auto one = [&](const char* role) {
      const auto path = dir / (std::string(role) + ".txt");
      return PromptTemplate::parse(read_text_file(path.string()), path.string());
    };
    return {one("filter"), one("analyzer"), one("designer"), one("generator")};
  }

  const PromptTemplate& for_role(RoleTag role) const {
    switch (role) {
      case RoleTag::filter: return filter;
      case RoleTag::analyzer: return analyzer;
      case RoleTag::designer: return designer;
      case RoleTag::generator:
      case RoleTag::voter_aux: return generator;
    }
    return generator;
  }
};

}  // namespace perfsampler::llm
