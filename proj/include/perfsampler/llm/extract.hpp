#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"

namespace perfsampler::llm {

enum class JsonKind { any, string, number, boolean, object, array, string_list };

constexpr std::string_view to_string(JsonKind k) {
  switch (k) {
    case JsonKind::any: return "any";
    case JsonKind::string: return "string";
    case JsonKind::number: return "number";
    case JsonKind::boolean: return "boolean";
    case JsonKind::object: return "object";
    case JsonKind::array: return "array";
    case JsonKind::string_list: return "string list";
  }
  return "any";
}

struct SchemaField {
  std::string key;
  JsonKind kind = JsonKind::any;
  bool required = true;
};

/// Expected shape of an LLM answer: a JSON object with the listed keys.
struct Schema {
  std::vector<SchemaField> fields;

  /// Empty when `value` conforms; otherwise one entry per missing or mistyped key.
  std::vector<std::string> problems(const Json& value) const {
    std::vector<std::string> out;
    if (!value.is_object()) {
      out.push_back("value is not an object");
      return out;
    }
    for (const auto& f : fields) {
      if (!value.contains(f.key)) {
        if (f.required) out.push_back("missing '" + f.key + "'");
        continue;
      }
      if (!matches(value[f.key], f.kind)) {
        out.push_back("'" + f.key + "' is not a " + std::string(to_string(f.kind)));
      }
    }
    return out;
  }

  static bool matches(const Json& v, JsonKind kind) {
    switch (kind) {
      case JsonKind::any: return true;
      case JsonKind::string: return v.is_string();
      case JsonKind::number: return v.is_number();
      case JsonKind::boolean: return v.is_boolean();
      case JsonKind::object: return v.is_object();
      case JsonKind::array: return v.is_array();
      case JsonKind::string_list:
        if (!v.is_array()) return false;
        for (const auto& e : v) {
          if (!e.is_string()) return false;
        }
        return true;
    }
    return false;
  }
};

namespace detail {

// Contents of ``` fenced blocks in order of appearance (info string stripped).
inline std::vector<std::string> fenced_blocks(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    auto body = text.find('\n', open + 3);
    if (body == std::string_view::npos) break;
    const auto close = text.find("```", body + 1);
    if (close == std::string_view::npos) break;
    out.emplace_back(text.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  return out;
}

// End (exclusive) of the balanced {...} or [...] starting at `start`, skipping
// brackets inside string literals.
inline std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      stack.push_back(c == '{' ? '}' : ']');
    } else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::nullopt;
      stack.pop_back();
      if (stack.empty()) return i + 1;
    }
  }
  return std::nullopt;
}

inline std::optional<Json> try_parse(std::string_view s) {
  try {
    return Json::parse(s);
  } catch (const Json::parse_error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Finds the first JSON value in free text that satisfies `expected`. Fenced
/// code blocks are tried first, then every balanced brace/bracket span from
/// left to right.
inline Json extract_structured(std::string_view text, const Schema& expected) {
  std::optional<std::vector<std::string>> first_problems;
  auto consider = [&](const Json& v) -> bool {
    auto p = expected.problems(v);
    if (p.empty()) return true;
    if (!first_problems) first_problems = std::move(p);
    return false;
  };

  for (const auto& block : detail::fenced_blocks(text)) {
    if (auto v = detail::try_parse(block); v && consider(*v)) return *v;
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{' && text[i] != '[') continue;
    auto end = detail::balanced_end(text, i);
    if (!end) continue;
    if (auto v = detail::try_parse(text.substr(i, *end - i)); v && consider(*v)) return *v;
  }
  if (!first_problems) throw Error(Errc::no_json_found, "no JSON value in model output");
  std::string msg;
  for (const auto& p : *first_problems) msg += (msg.empty() ? "" : "; ") + p;
  throw Error(Errc::schema_mismatch, msg);
}

}  // namespace perfsampler::llm
