#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"
#include "perfsampler/sampling/outcome.hpp"
#include "perfsampler/space/config_space.hpp"

namespace perfsampler {

inline constexpr std::string_view kMetricPrefix = "metric:";

/// One measured value vector per configuration of an enumerated space.
/// Pruned datasets keep a pointer to the full dataset they were cut from.
struct MeasuredDataset {
  std::string system;
  std::shared_ptr<const EnumeratedSpace> space;
  ObjectiveSpec metrics;
  std::vector<std::vector<double>> values;  // [row][metric], row = enumeration index
  bool pruned = false;
  std::shared_ptr<const MeasuredDataset> parent;

  std::size_t size() const { return values.size(); }

  double value(std::size_t row, std::size_t metric) const { return values.at(row).at(metric); }

  MetricValues metric_values(std::size_t row) const {
    MetricValues m;
    for (std::size_t j = 0; j < metrics.size(); ++j) m.emplace(metrics.metrics[j], values[row][j]);
    return m;
  }

  std::size_t metric_index(const std::string& name) const {
    for (std::size_t j = 0; j < metrics.size(); ++j) {
      if (metrics.metrics[j] == name) return j;
    }
    throw Error(Errc::invalid_argument, "dataset has no metric '" + name + "'");
  }

  /// Row of a configuration of this dataset's space (pinned options of a
  /// pruned space may be present and are ignored).
  std::optional<std::size_t> row_of(const Configuration& c) const {
    Configuration active;
    for (const auto& o : space->space().options()) {
      auto it = c.assignments.find(o.name);
      if (it == c.assignments.end()) return std::nullopt;
      active.assignments.emplace(o.name, it->second);
    }
    return space->index_of(active);
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace detail

/// Parses CSV text whose header lists the space's option names followed by
/// "metric:<name>" columns; every configuration must appear exactly once.
inline MeasuredDataset parse_dataset(const std::string& csv_text, const ConfigSpace& space, std::string system = "",
                                     const std::map<std::string, Direction>& directions = {}) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::header_mismatch, "dataset is empty");
  const auto header = detail::split_csv_line(line);
  std::vector<std::size_t> option_column(space.size(), header.size());
  std::vector<std::size_t> metric_column;
  std::vector<std::string> metric_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind(kMetricPrefix, 0) == 0) {
      metric_names.push_back(h.substr(kMetricPrefix.size()));
      metric_column.push_back(c);
    } else if (auto oi = space.find(h)) {
      if (option_column[*oi] != header.size()) throw Error(Errc::header_mismatch, "column '" + h + "' repeated");
      option_column[*oi] = c;
    } else {
      throw Error(Errc::header_mismatch, "column '" + h + "' is neither an option nor a metric");
    }
  }
  for (std::size_t o = 0; o < space.size(); ++o) {
    if (option_column[o] == header.size()) {
      throw Error(Errc::header_mismatch, "no column for option '" + space.options()[o].name + "'");
    }
  }
  if (metric_names.empty()) throw Error(Errc::header_mismatch, "no metric columns");
  std::vector<Direction> dirs;
  for (const auto& m : metric_names) {
    auto it = directions.find(m);
    dirs.push_back(it == directions.end() ? Direction::minimize : it->second);
  }

  MeasuredDataset ds;
  ds.system = std::move(system);
  ds.space = std::make_shared<const EnumeratedSpace>(space);
  ds.metrics = ObjectiveSpec(metric_names, dirs);
  ds.values.assign(ds.space->size(), {});
  std::vector<bool> filled(ds.space->size(), false);
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = "line " + std::to_string(line_no);
    if (cells.size() != header.size()) throw Error(Errc::header_mismatch, where + ": wrong number of cells");
    ValueIndices idx(space.size());
    for (std::size_t o = 0; o < space.size(); ++o) {
      auto vi = space.options()[o].match_text(cells[option_column[o]]);
      if (!vi) {
        throw Error(Errc::invalid_configuration,
                    where + ": '" + cells[option_column[o]] + "' is not a value of '" + space.options()[o].name + "'");
      }
      idx[o] = static_cast<std::uint32_t>(*vi);
    }
    auto row = ds.space->index_of(idx);
    if (!row) throw Error(Errc::invalid_configuration, where + ": configuration violates a constraint");
    if (filled[*row]) throw Error(Errc::duplicate_row, where + ": configuration listed twice");
    std::vector<double> v;
    for (auto c : metric_column) {
      double x = 0.0;
      try {
        std::size_t used = 0;
        x = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument("trailing text");
      } catch (const std::exception&) {
        throw Error(Errc::non_finite_input, where + ": metric cell '" + cells[c] + "' is not a number");
      }
      if (!std::isfinite(x)) throw Error(Errc::non_finite_input, where + ": non-finite metric value");
      v.push_back(x);
    }
    ds.values[*row] = std::move(v);
    filled[*row] = true;
    ++rows;
  }
  if (rows != ds.space->size()) {
    throw Error(Errc::incomplete_dataset, "dataset has " + std::to_string(rows) + " rows but the space has " +
                                              std::to_string(ds.space->size()) + " configurations");
  }
  return ds;
}

inline MeasuredDataset load_dataset(const std::string& csv_path, const std::string& space_path, std::string system = "",
                                    const std::map<std::string, Direction>& directions = {}) {
  return parse_dataset(read_text_file(csv_path), read_space_file(space_path), std::move(system), directions);
}

inline std::string dataset_to_csv(const MeasuredDataset& ds) {
  std::string out;
  const auto& opts = ds.space->space().options();
  for (std::size_t o = 0; o < opts.size(); ++o) out += (o ? "," : "") + detail::csv_cell(opts[o].name);
  for (const auto& m : ds.metrics.metrics) out += "," + detail::csv_cell(std::string(kMetricPrefix) + m);
  out += "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto idx = ds.space->indices(r);
    for (std::size_t o = 0; o < opts.size(); ++o) out += (o ? "," : "") + detail::csv_cell(to_text(opts[o].values[idx[o]]));
    for (double v : ds.values[r]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

/// Rows of `full` whose pinned options match the pruned space's pins.
inline MeasuredDataset pruned_view(std::shared_ptr<const MeasuredDataset> full, const ConfigSpace& pruned) {
  MeasuredDataset ds;
  ds.system = full->system;
  ds.space = std::make_shared<const EnumeratedSpace>(pruned);
  ds.metrics = full->metrics;
  ds.pruned = true;
  ds.parent = full;
  ds.values.reserve(ds.space->size());
  for (std::size_t r = 0; r < ds.space->size(); ++r) {
    auto row = full->row_of(pruned.complete(ds.space->configuration(r)));
    if (!row) throw Error(Errc::incomplete_dataset, "pruned configuration missing from the full dataset");
    ds.values.push_back(full->values[*row]);
  }
  return ds;
}

/// Measurement oracle backed by a recorded dataset (lookups only).
class DatasetOracle : public MeasurementOracle {
 public:
  explicit DatasetOracle(std::shared_ptr<const MeasuredDataset> ds) : ds_(std::move(ds)) {}

  MetricValues measure(const Configuration& full_configuration) const override {
    auto row = ds_->row_of(full_configuration);
    if (!row) throw Error(Errc::oracle_failure, "configuration not in dataset: " + describe(full_configuration));
    return ds_->metric_values(*row);
  }

  const MeasuredDataset& dataset() const { return *ds_; }

 private:
  std::shared_ptr<const MeasuredDataset> ds_;
};

}  // namespace perfsampler
