#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"

namespace perfsampler {

inline constexpr std::uint64_t kDefaultEnumerationLimit = 1'000'000;

// ---------------------------------------------------------------------------
// Option values

/// One admissible option value. Integers and reals are kept apart so that a
/// space file written back out is byte-identical to what was read.
using OptionValue = std::variant<std::int64_t, double, bool, std::string>;

inline bool is_number(const OptionValue& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

inline double as_number(const OptionValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  throw Error(Errc::invalid_argument, "value '" + std::get<std::string>(v) + "' is not numeric");
}

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string to_text(const OptionValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return format_double(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else return x;
      },
      v);
}

inline Json to_json(const OptionValue& v) {
  return std::visit([](const auto& x) { return Json(x); }, v);
}

inline OptionValue value_from_json(const Json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(Errc::invalid_option, "option values must be numbers, booleans or strings, got " + j.dump());
}

// ---------------------------------------------------------------------------
// Options

enum class OptionKind { numeric, categorical, boolean };
enum class Sensitivity { unknown, sensitive, insensitive };

constexpr std::string_view to_string(OptionKind k) {
  switch (k) {
    case OptionKind::numeric: return "numeric";
    case OptionKind::categorical: return "categorical";
    case OptionKind::boolean: return "boolean";
  }
  return "categorical";
}

inline OptionKind option_kind_from_string(std::string_view s) {
  if (s == "numeric" || s == "numeric-discrete") return OptionKind::numeric;
  if (s == "categorical") return OptionKind::categorical;
  if (s == "boolean") return OptionKind::boolean;
  throw Error(Errc::invalid_option, "unknown option kind '" + std::string(s) + "'");
}

constexpr std::string_view to_string(Sensitivity s) {
  switch (s) {
    case Sensitivity::unknown: return "unknown";
    case Sensitivity::sensitive: return "sensitive";
    case Sensitivity::insensitive: return "insensitive";
  }
  return "unknown";
}

inline Sensitivity sensitivity_from_string(std::string_view s) {
  if (s == "sensitive") return Sensitivity::sensitive;
  if (s == "insensitive") return Sensitivity::insensitive;
  if (s == "unknown") return Sensitivity::unknown;
  throw Error(Errc::invalid_option, "unknown sensitivity '" + std::string(s) + "'");
}

struct ConfigOption {
  std::string name;
  OptionKind kind = OptionKind::categorical;
  std::vector<OptionValue> values;
  std::string description;
  Sensitivity performance_sensitive = Sensitivity::unknown;
  std::optional<OptionValue> default_value;

  std::optional<std::size_t> find_value(const OptionValue& v) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] == v) return i;
    }
    // 8 and 8.0 name the same numeric level.
    if (kind == OptionKind::numeric && is_number(v)) {
      const double x = as_number(v);
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::abs(as_number(values[i]) - x) <= 1e-9 * std::max(1.0, std::abs(x))) return i;
      }
    }
    return std::nullopt;
  }

  /// Lenient lookup for values coming from text: LLM answers, CSV cells.
  std::optional<std::size_t> match_text(std::string_view text) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (to_text(values[i]) == text) return i;
    }
    if (kind == OptionKind::boolean) {
      if (text == "1" || text == "True" || text == "TRUE") return find_value(OptionValue(true));
      if (text == "0" || text == "False" || text == "FALSE") return find_value(OptionValue(false));
    }
    if (kind == OptionKind::numeric || kind == OptionKind::boolean) {
      double x = 0.0;
      const auto* first = text.data();
      const auto* last = text.data() + text.size();
      if (!text.empty() && *first == '+') ++first;
      auto res = std::from_chars(first, last, x);
      if (res.ec == std::errc() && res.ptr == last) {
        for (std::size_t i = 0; i < values.size(); ++i) {
          if (std::abs(as_number(values[i]) - x) <= 1e-9 * std::max(1.0, std::abs(x))) return i;
        }
      }
    }
    return std::nullopt;
  }

  std::optional<std::size_t> match_json(const Json& j) const {
    if (j.is_string()) return match_text(j.get<std::string>());
    if (j.is_boolean() || j.is_number()) {
      if (auto i = find_value(value_from_json(j))) return i;
      return match_text(to_text(value_from_json(j)));
    }
    return std::nullopt;
  }

  void validate() const {
    if (name.empty()) throw Error(Errc::duplicate_or_missing_name, "option without a name");
    if (values.empty()) throw Error(Errc::invalid_option, "option '" + name + "' has no values");
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = i + 1; j < values.size(); ++j) {
        if (values[i] == values[j]) {
          throw Error(Errc::invalid_option, "option '" + name + "' lists value " + to_text(values[i]) + " twice");
        }
      }
    }
    if (kind == OptionKind::numeric) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!is_number(values[i])) {
          throw Error(Errc::invalid_option, "numeric option '" + name + "' has non-numeric value");
        }
        if (i > 0 && !(as_number(values[i - 1]) < as_number(values[i]))) {
          throw Error(Errc::invalid_option, "numeric option '" + name + "' values must be strictly increasing");
        }
      }
    }
    if (kind == OptionKind::boolean) {
      for (const auto& v : values) {
        if (std::holds_alternative<std::string>(v)) {
          throw Error(Errc::invalid_option, "boolean option '" + name + "' has a string value");
        }
      }
    }
    if (default_value && !find_value(*default_value)) {
      throw Error(Errc::inadmissible_value, "default of '" + name + "' is not an admissible value");
    }
  }
};

inline OptionKind infer_kind(const std::vector<OptionValue>& values) {
  if (values.empty()) return OptionKind::categorical;
  const bool all_bool = std::all_of(values.begin(), values.end(),
                                    [](const auto& v) { return std::holds_alternative<bool>(v); });
  if (all_bool) return OptionKind::boolean;
  const bool all_num = std::all_of(values.begin(), values.end(), [](const auto& v) { return is_number(v); });
  return all_num ? OptionKind::numeric : OptionKind::categorical;
}

inline Json option_to_json(const ConfigOption& o) {
  Json j;
  j["name"] = o.name;
  j["kind"] = std::string(to_string(o.kind));
  j["values"] = Json::array();
  for (const auto& v : o.values) j["values"].push_back(to_json(v));
  j["description"] = o.description;
  j["performance_sensitive"] = std::string(to_string(o.performance_sensitive));
  if (o.default_value) j["default"] = to_json(*o.default_value);
  return j;
}

inline ConfigOption option_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_option, "option entry must be an object");
  ConfigOption o;
  if (!j.contains("name") || !j["name"].is_string()) {
    throw Error(Errc::duplicate_or_missing_name, "option entry without a string \"name\"");
  }
  o.name = j["name"].get<std::string>();
  if (j.contains("description")) {
    if (!j["description"].is_string()) throw Error(Errc::invalid_option, "description of '" + o.name + "' is not a string");
    o.description = j["description"].get<std::string>();
  }
  if (j.contains("values")) {
    if (!j["values"].is_array()) throw Error(Errc::invalid_option, "values of '" + o.name + "' is not a list");
    for (const auto& v : j["values"]) o.values.push_back(value_from_json(v));
  }
  o.kind = j.contains("kind") ? option_kind_from_string(j["kind"].get<std::string>()) : infer_kind(o.values);
  if (j.contains("performance_sensitive")) {
    o.performance_sensitive = sensitivity_from_string(j["performance_sensitive"].get<std::string>());
  }
  if (j.contains("default")) o.default_value = value_from_json(j["default"]);
  return o;
}

/// Reads a documentation array of {"name", "description", ["values"], ["kind"], ["default"]}
/// objects. Options without "values" come back with an empty value list and must
/// be completed from the dataset's space before use.
inline std::vector<ConfigOption> parse_documentation(const std::string& doc_text) {
  const Json doc = parse_json(doc_text, "documentation");
  if (!doc.is_array()) throw Error(Errc::malformed_json, "documentation must be a JSON array");
  std::vector<ConfigOption> out;
  std::set<std::string> seen;
  for (const auto& entry : doc) {
    ConfigOption o = option_from_json(entry);
    if (!seen.insert(o.name).second) {
      throw Error(Errc::duplicate_or_missing_name, "option '" + o.name + "' documented twice");
    }
    out.push_back(std::move(o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configurations

struct Configuration {
  std::map<std::string, OptionValue> assignments;

  const OptionValue& at(const std::string& name) const {
    auto it = assignments.find(name);
    if (it == assignments.end()) throw Error(Errc::unknown_option, "configuration does not assign '" + name + "'");
    return it->second;
  }
  void set(const std::string& name, OptionValue v) { assignments[name] = std::move(v); }

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend bool operator<(const Configuration& a, const Configuration& b) { return a.assignments < b.assignments; }
};

inline Json configuration_to_json(const Configuration& c) {
  Json j = Json::object();
  for (const auto& [k, v] : c.assignments) j[k] = to_json(v);
  return j;
}

inline Configuration configuration_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_configuration, "configuration must be a JSON object");
  Configuration c;
  for (const auto& [k, v] : j.items()) c.assignments[k] = value_from_json(v);
  return c;
}

/// Compact one-line form, e.g. "algorithm=-g -L=9 -p=1".
inline std::string describe(const Configuration& c) {
  std::string s;
  for (const auto& [k, v] : c.assignments) {
    if (!s.empty()) s += ' ';
    s += k + "=" + to_text(v);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Spaces

/// A forbidden combination: a configuration matching every entry is excluded.
struct Constraint {
  std::vector<std::pair<std::string, OptionValue>> forbidden;
};

using ValueIndices = std::vector<std::uint32_t>;

class ConfigSpace {
 public:
  ConfigSpace() = default;

  explicit ConfigSpace(std::vector<ConfigOption> options, std::vector<Constraint> constraints = {},
                       std::vector<std::pair<std::string, OptionValue>> dropped = {})
      : options_(std::move(options)), constraints_(std::move(constraints)), dropped_(std::move(dropped)) {
    for (std::size_t i = 0; i < options_.size(); ++i) {
      options_[i].validate();
      if (!index_.emplace(options_[i].name, i).second) {
        throw Error(Errc::duplicate_or_missing_name, "option '" + options_[i].name + "' defined twice");
      }
    }
    for (const auto& [name, value] : dropped_) {
      if (index_.count(name)) {
        throw Error(Errc::invalid_option, "option '" + name + "' is both active and pinned");
      }
    }
    for (const auto& c : constraints_) {
      if (c.forbidden.empty()) throw Error(Errc::invalid_argument, "empty constraint");
      std::vector<std::pair<std::uint32_t, std::uint32_t>> compiled;
      for (const auto& [name, value] : c.forbidden) {
        auto it = index_.find(name);
        if (it == index_.end()) throw Error(Errc::unknown_option, "constraint names unknown option '" + name + "'");
        auto vi = options_[it->second].find_value(value);
        if (!vi) throw Error(Errc::inadmissible_value, "constraint value for '" + name + "' is not admissible");
        compiled.emplace_back(static_cast<std::uint32_t>(it->second), static_cast<std::uint32_t>(*vi));
      }
      compiled_.push_back(std::move(compiled));
    }
  }

  const std::vector<ConfigOption>& options() const { return options_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  /// Options removed by pruning together with the value they are pinned to.
  const std::vector<std::pair<std::string, OptionValue>>& dropped() const { return dropped_; }
  std::size_t size() const { return options_.size(); }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const ConfigOption& option(std::string_view name) const {
    auto i = find(name);
    if (!i) throw Error(Errc::unknown_option, "unknown option '" + std::string(name) + "'");
    return options_[*i];
  }

  /// Product of per-option value counts, saturating at UINT64_MAX.
  std::uint64_t raw_size() const {
    std::uint64_t n = 1;
    for (const auto& o : options_) {
      const std::uint64_t c = o.values.size();
      if (n > UINT64_MAX / c) return UINT64_MAX;
      n *= c;
    }
    return n;
  }

  /// Number of valid configurations: raw product minus the combinations
  /// excluded by constraints (inclusion-exclusion over constraint subsets).
  std::uint64_t cardinality() const {
    if (compiled_.empty()) return raw_size();
    if (compiled_.size() > 20) {
      throw Error(Errc::cardinality_over_limit, "cardinality with more than 20 constraints requires enumeration");
    }
    const std::size_t m = compiled_.size();
    __int128 total = 0;
    std::vector<std::int64_t> fixed(options_.size());
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
      std::fill(fixed.begin(), fixed.end(), -1);
      bool consistent = true;
      for (std::size_t c = 0; c < m && consistent; ++c) {
        if (!(mask >> c & 1ULL)) continue;
        for (auto [opt, val] : compiled_[c]) {
          if (fixed[opt] >= 0 && fixed[opt] != static_cast<std::int64_t>(val)) {
            consistent = false;
            break;
          }
          fixed[opt] = val;
        }
      }
      if (!consistent) continue;
      __int128 count = 1;
      for (std::size_t o = 0; o < options_.size(); ++o) {
        if (fixed[o] < 0) count *= static_cast<__int128>(options_[o].values.size());
      }
      total += (std::popcount(mask) % 2 == 0) ? count : -count;
    }
    return static_cast<std::uint64_t>(total);
  }

  bool violates_constraint(std::span<const std::uint32_t> idx) const {
    for (const auto& c : compiled_) {
      bool all = true;
      for (auto [opt, val] : c) {
        if (idx[opt] != val) {
          all = false;
          break;
        }
      }
      if (all) return true;
    }
    return false;
  }

  /// Value indices for a configuration that assigns every option admissibly;
  /// nullopt otherwise. Extra assignments (e.g. pinned options) are ignored.
  std::optional<ValueIndices> indices_of(const Configuration& cfg) const {
    ValueIndices idx(options_.size());
    for (std::size_t o = 0; o < options_.size(); ++o) {
      auto it = cfg.assignments.find(options_[o].name);
      if (it == cfg.assignments.end()) return std::nullopt;
      auto vi = options_[o].find_value(it->second);
      if (!vi) return std::nullopt;
      idx[o] = static_cast<std::uint32_t>(*vi);
    }
    return idx;
  }

  Configuration configuration_at(std::span<const std::uint32_t> idx) const {
    Configuration c;
    for (std::size_t o = 0; o < options_.size(); ++o) c.assignments.emplace(options_[o].name, options_[o].values[idx[o]]);
    return c;
  }

  /// Adds the pinned values of dropped options so the result addresses the
  /// full (unpruned) space.
  Configuration complete(const Configuration& cfg) const {
    Configuration full = cfg;
    for (const auto& [name, value] : dropped_) full.assignments.emplace(name, value);
    return full;
  }

 private:
  std::vector<ConfigOption> options_;
  std::vector<Constraint> constraints_;
  std::vector<std::pair<std::string, OptionValue>> dropped_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> compiled_;
};

inline Json space_to_json(const ConfigSpace& space) {
  Json j;
  j["options"] = Json::array();
  for (const auto& o : space.options()) j["options"].push_back(option_to_json(o));
  j["constraints"] = Json::array();
  for (const auto& c : space.constraints()) {
    Json cj = Json::object();
    for (const auto& [k, v] : c.forbidden) cj[k] = to_json(v);
    j["constraints"].push_back(std::move(cj));
  }
  j["dropped"] = Json::object();
  for (const auto& [k, v] : space.dropped()) j["dropped"][k] = to_json(v);
  return j;
}

inline ConfigSpace space_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("options") || !j["options"].is_array()) {
    throw Error(Errc::malformed_json, "space definition needs an \"options\" array");
  }
  std::vector<ConfigOption> options;
  for (const auto& oj : j["options"]) options.push_back(option_from_json(oj));
  std::vector<Constraint> constraints;
  if (j.contains("constraints")) {
    for (const auto& cj : j["constraints"]) {
      if (!cj.is_object()) throw Error(Errc::malformed_json, "constraint must be an object");
      Constraint c;
      for (const auto& [k, v] : cj.items()) c.forbidden.emplace_back(k, value_from_json(v));
      constraints.push_back(std::move(c));
    }
  }
  std::vector<std::pair<std::string, OptionValue>> dropped;
  if (j.contains("dropped")) {
    for (const auto& [k, v] : j["dropped"].items()) dropped.emplace_back(k, value_from_json(v));
  }
  return ConfigSpace(std::move(options), std::move(constraints), std::move(dropped));
}

inline ConfigSpace read_space_file(const std::string& path) { return space_from_json(read_json_file(path)); }
inline void write_space_file(const std::string& path, const ConfigSpace& space) {
  write_json_file(path, space_to_json(space));
}

// ---------------------------------------------------------------------------
// Validation

enum class ValidationRule { none, missing_option, unknown_option, inadmissible_value, constraint_violation };

constexpr std::string_view to_string(ValidationRule r) {
  switch (r) {
    case ValidationRule::none: return "Valid";
    case ValidationRule::missing_option: return "MissingOption";
    case ValidationRule::unknown_option: return "UnknownOption";
    case ValidationRule::inadmissible_value: return "InadmissibleValue";
    case ValidationRule::constraint_violation: return "ConstraintViolation";
  }
  return "Valid";
}

struct Verdict {
  ValidationRule rule = ValidationRule::none;
  std::string detail;
  bool valid() const { return rule == ValidationRule::none; }
};

inline Verdict validate_configuration(const ConfigSpace& space, const Configuration& cfg) {
  for (const auto& o : space.options()) {
    auto it = cfg.assignments.find(o.name);
    if (it == cfg.assignments.end()) return {ValidationRule::missing_option, o.name};
    if (!o.find_value(it->second)) return {ValidationRule::inadmissible_value, o.name + "=" + to_text(it->second)};
  }
  for (const auto& [name, value] : cfg.assignments) {
    if (!space.find(name)) return {ValidationRule::unknown_option, name};
  }
  if (space.violates_constraint(*space.indices_of(cfg))) return {ValidationRule::constraint_violation, describe(cfg)};
  return {};
}

// ---------------------------------------------------------------------------
// Encoding

/// Numeric options min-max scaled to [0,1], booleans 0/1, categoricals
/// one-hot in value-list order.
class Encoder {
 public:
  explicit Encoder(const ConfigSpace& space) {
    for (const auto& o : space.options()) {
      Block b;
      b.offset = dimension_;
      b.kind = o.kind;
      if (o.kind == OptionKind::categorical) {
        b.width = o.values.size();
      } else {
        b.width = 1;
        for (const auto& v : o.values) {
          b.levels.push_back(o.kind == OptionKind::boolean ? (as_number(v) != 0.0 ? 1.0 : 0.0) : as_number(v));
        }
        if (o.kind == OptionKind::numeric) {
          const double lo = b.levels.front();
          const double hi = b.levels.back();
          for (auto& x : b.levels) x = hi > lo ? (x - lo) / (hi - lo) : 0.0;
        }
      }
      dimension_ += b.width;
      blocks_.push_back(std::move(b));
    }
  }

  std::size_t dimension() const { return dimension_; }

  void encode(std::span<const std::uint32_t> idx, std::span<double> out) const {
    for (std::size_t o = 0; o < blocks_.size(); ++o) {
      const auto& b = blocks_[o];
      if (b.kind == OptionKind::categorical) {
        for (std::size_t w = 0; w < b.width; ++w) out[b.offset + w] = (w == idx[o]) ? 1.0 : 0.0;
      } else {
        out[b.offset] = b.levels[idx[o]];
      }
    }
  }

  std::vector<double> encode(std::span<const std::uint32_t> idx) const {
    std::vector<double> out(dimension_);
    encode(idx, out);
    return out;
  }

 private:
  struct Block {
    std::size_t offset = 0;
    std::size_t width = 0;
    OptionKind kind = OptionKind::categorical;
    std::vector<double> levels;
  };
  std::vector<Block> blocks_;
  std::size_t dimension_ = 0;
};

inline std::vector<double> encode_configuration(const ConfigSpace& space, const Configuration& cfg) {
  const Verdict v = validate_configuration(space, cfg);
  if (!v.valid()) {
    throw Error(Errc::invalid_configuration, std::string(to_string(v.rule)) + ": " + v.detail);
  }
  return Encoder(space).encode(*space.indices_of(cfg));
}

// ---------------------------------------------------------------------------
// Enumeration

/// All valid configurations of a space, materialized in lexicographic order
/// (first option slowest, values in list order), with their encodings.
class EnumeratedSpace {
 public:
  explicit EnumeratedSpace(ConfigSpace space, std::uint64_t limit = kDefaultEnumerationLimit)
      : space_(std::move(space)), encoder_(space_) {
    const std::uint64_t raw = space_.raw_size();
    if (raw > limit) {
      throw Error(Errc::cardinality_over_limit,
                  "space has " + std::to_string(raw) + " raw combinations, limit is " + std::to_string(limit));
    }
    const std::size_t n_opt = space_.size();
    radix_.resize(n_opt);
    for (std::size_t o = 0; o < n_opt; ++o) radix_[o] = space_.options()[o].values.size();
    ValueIndices cur(n_opt, 0);
    for (std::uint64_t code = 0; code < raw; ++code) {
      if (!space_.violates_constraint(cur)) {
        code_to_index_.emplace(code, size_);
        flat_.insert(flat_.end(), cur.begin(), cur.end());
        ++size_;
      }
      for (std::size_t o = n_opt; o-- > 0;) {
        if (++cur[o] < radix_[o]) break;
        cur[o] = 0;
      }
    }
    features_.resize(size_ * encoder_.dimension());
    for (std::size_t i = 0; i < size_; ++i) {
      encoder_.encode(indices(i), std::span<double>(features_.data() + i * encoder_.dimension(), encoder_.dimension()));
    }
  }

  const ConfigSpace& space() const { return space_; }
  const Encoder& encoder() const { return encoder_; }
  std::size_t size() const { return size_; }
  std::size_t dimension() const { return encoder_.dimension(); }

  std::span<const std::uint32_t> indices(std::size_t i) const {
    return {flat_.data() + i * space_.size(), space_.size()};
  }
  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * encoder_.dimension(), encoder_.dimension()};
  }
  Configuration configuration(std::size_t i) const { return space_.configuration_at(indices(i)); }

  std::optional<std::size_t> index_of(std::span<const std::uint32_t> idx) const {
    std::uint64_t code = 0;
    for (std::size_t o = 0; o < radix_.size(); ++o) code = code * radix_[o] + idx[o];
    auto it = code_to_index_.find(code);
    if (it == code_to_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> index_of(const Configuration& cfg) const {
    auto idx = space_.indices_of(cfg);
    if (!idx) return std::nullopt;
    return index_of(*idx);
  }

 private:
  ConfigSpace space_;
  Encoder encoder_;
  std::vector<std::uint64_t> radix_;
  std::vector<std::uint32_t> flat_;
  std::vector<double> features_;
  std::unordered_map<std::uint64_t, std::size_t> code_to_index_;
  std::size_t size_ = 0;
};

inline std::vector<Configuration> enumerate_space(const ConfigSpace& space,
                                                  std::uint64_t limit = kDefaultEnumerationLimit) {
  if (space.raw_size() > limit) {
    throw Error(Errc::cardinality_over_limit, "space exceeds enumeration limit " + std::to_string(limit));
  }
  EnumeratedSpace e(space, limit);
  std::vector<Configuration> out;
  out.reserve(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out.push_back(e.configuration(i));
  return out;
}

// ---------------------------------------------------------------------------
// Pruning

/// Restricts a space to `keep`; every dropped option is pinned to its entry in
/// `defaults`. Constraints touching dropped options survive only if the pinned
/// values still match them.
inline ConfigSpace prune_space(const ConfigSpace& space, const std::set<std::string>& keep,
                               const std::map<std::string, OptionValue>& defaults) {
  for (const auto& name : keep) {
    if (!space.find(name)) throw Error(Errc::unknown_option, "cannot keep unknown option '" + name + "'");
  }
  std::vector<ConfigOption> kept;
  auto dropped = space.dropped();
  std::map<std::string, OptionValue> pins;
  for (const auto& o : space.options()) {
    if (keep.count(o.name)) {
      kept.push_back(o);
      continue;
    }
    auto it = defaults.find(o.name);
    if (it == defaults.end()) throw Error(Errc::missing_default, "no default given for dropped option '" + o.name + "'");
    auto vi = o.find_value(it->second);
    if (!vi) throw Error(Errc::inadmissible_value, "default for '" + o.name + "' is not admissible");
    dropped.emplace_back(o.name, o.values[*vi]);
    pins.emplace(o.name, o.values[*vi]);
  }
  std::vector<Constraint> constraints;
  for (const auto& c : space.constraints()) {
    Constraint reduced;
    bool can_fire = true;
    for (const auto& [name, value] : c.forbidden) {
      auto pin = pins.find(name);
      if (pin == pins.end()) {
        reduced.forbidden.emplace_back(name, value);
      } else if (!(pin->second == value)) {
        can_fire = false;
      }
    }
    if (!can_fire) continue;
    if (reduced.forbidden.empty()) {
      throw Error(Errc::inadmissible_value, "pinned defaults form a forbidden combination");
    }
    constraints.push_back(std::move(reduced));
  }
  return ConfigSpace(std::move(kept), std::move(constraints), std::move(dropped));
}

}  // namespace perfsampler
