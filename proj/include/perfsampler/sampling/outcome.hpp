#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"
#include "perfsampler/space/config_space.hpp"

namespace perfsampler {

enum class Direction { minimize, maximize };

constexpr std::string_view to_string(Direction d) { return d == Direction::minimize ? "minimize" : "maximize"; }

inline Direction direction_from_string(std::string_view s) {
  if (s == "minimize" || s == "min") return Direction::minimize;
  if (s == "maximize" || s == "max") return Direction::maximize;
  throw Error(Errc::invalid_argument, "unknown direction '" + std::string(s) + "'");
}

struct ObjectiveSpec {
  std::vector<std::string> metrics;
  std::vector<Direction> directions;

  ObjectiveSpec() = default;
  ObjectiveSpec(std::vector<std::string> names, std::vector<Direction> dirs)
      : metrics(std::move(names)), directions(std::move(dirs)) {
    validate();
  }

  static ObjectiveSpec single(std::string name, Direction d = Direction::minimize) { return {{std::move(name)}, {d}}; }

  std::size_t size() const { return metrics.size(); }

  void validate() const {
    if (metrics.empty()) throw Error(Errc::invalid_argument, "objective spec without metrics");
    if (metrics.size() != directions.size()) throw Error(Errc::invalid_argument, "one direction per metric required");
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      for (std::size_t j = i + 1; j < metrics.size(); ++j) {
        if (metrics[i] == metrics[j]) throw Error(Errc::invalid_argument, "duplicate metric '" + metrics[i] + "'");
      }
    }
  }

  ObjectiveSpec only(std::size_t j) const { return single(metrics.at(j), directions.at(j)); }

  /// Value mapped so that smaller is better.
  double as_cost(std::size_t j, double value) const {
    return directions[j] == Direction::maximize ? -value : value;
  }
};

using MetricValues = std::map<std::string, double>;

/// Source of measurements for full-space configurations. Must tolerate
/// concurrent calls.
class MeasurementOracle {
 public:
  virtual ~MeasurementOracle() = default;
  virtual MetricValues measure(const Configuration& full_configuration) const = 0;
};

struct SamplerOutcome {
  std::string sampler;
  std::uint64_t seed = 0;
  std::vector<Configuration> sampled;
  std::vector<Json> notes;

  Json to_json() const {
    Json j;
    j["sampler"] = sampler;
    j["seed"] = seed;
    j["configurations"] = Json::array();
    for (const auto& c : sampled) j["configurations"].push_back(configuration_to_json(c));
    j["notes"] = notes;
    return j;
  }
};

inline void require_budget(std::size_t k, std::size_t available) {
  if (k == 0) throw Error(Errc::invalid_argument, "sampling budget must be positive");
  if (k > available) {
    throw Error(Errc::budget_exceeds_space,
                "budget " + std::to_string(k) + " exceeds space cardinality " + std::to_string(available));
  }
}

/// Bookkeeping for samplers that spend their budget on oracle calls: each
/// distinct configuration is measured once and recorded in call order.
class EvaluationLedger {
 public:
  EvaluationLedger(const EnumeratedSpace& space, const MeasurementOracle& oracle, ObjectiveSpec objectives)
      : space_(space), oracle_(oracle), objectives_(std::move(objectives)), measured_(space.size(), false) {}

  bool measured(std::size_t idx) const { return measured_[idx]; }
  std::size_t count() const { return order_.size(); }
  const std::vector<std::size_t>& order() const { return order_; }
  const ObjectiveSpec& objectives() const { return objectives_; }

  /// Cost vector (minimization) of a measured configuration; measures it first
  /// if needed.
  const std::vector<double>& evaluate(std::size_t idx) {
    auto it = costs_.find(idx);
    if (it != costs_.end()) return it->second;
    const Configuration full = space_.space().complete(space_.configuration(idx));
    MetricValues m;
    try {
      m = oracle_.measure(full);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::oracle_failure, e.what());
    }
    std::vector<double> cost(objectives_.size());
    for (std::size_t j = 0; j < objectives_.size(); ++j) {
      auto mit = m.find(objectives_.metrics[j]);
      if (mit == m.end()) throw Error(Errc::oracle_failure, "oracle did not report '" + objectives_.metrics[j] + "'");
      if (!std::isfinite(mit->second)) throw Error(Errc::oracle_failure, "non-finite measurement");
      cost[j] = objectives_.as_cost(j, mit->second);
    }
    measured_[idx] = true;
    order_.push_back(idx);
    return costs_.emplace(idx, std::move(cost)).first->second;
  }

  const std::vector<double>& cost(std::size_t idx) const { return costs_.at(idx); }

  std::vector<Configuration> configurations() const {
    std::vector<Configuration> out;
    out.reserve(order_.size());
    for (auto i : order_) out.push_back(space_.configuration(i));
    return out;
  }

 private:
  const EnumeratedSpace& space_;
  const MeasurementOracle& oracle_;
  ObjectiveSpec objectives_;
  std::vector<bool> measured_;
  std::vector<std::size_t> order_;
  std::map<std::size_t, std::vector<double>> costs_;
};

}  // namespace perfsampler
