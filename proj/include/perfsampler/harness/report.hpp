#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "perfsampler/harness/protocol.hpp"

namespace perfsampler {

inline std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

/// "2.309(↑59.3%)*L": mean RMSE, improvement over the reference (↓ when the
/// cell is worse), then significance/effect markers. Without a p-value the
/// markers read "n/a".
inline std::string format_cell(double mean, std::optional<double> improvement, std::optional<double> p,
                               std::optional<double> delta, double large = stats::kLargeEffect) {
  std::string s = fixed(mean, 3);
  if (improvement) {
    // Round first so that -0.04 prints as ↑0.0% rather than ↓0.0%.
    const double r = std::round(*improvement * 10.0) / 10.0;
    s += r < 0.0 ? "(↓" + fixed(-r, 1) + "%)" : "(↑" + fixed(r == 0.0 ? 0.0 : r, 1) + "%)";
  }
  if (improvement || delta) {
    if (p) s += significance_markers(p, delta, large);
    else s += " n/a";
  }
  return s;
}

/// Rendered text of one cell as it appears in the table. Only the candidate
/// sampler's cell carries the comparison against the reference.
inline std::string render_cell(const Cell& c, const EvalReport& report) {
  if (c.status == CellStatus::failed) return "failed";
  if (c.status == CellStatus::degenerate) return "degenerate";
  if (c.key.sampler == report.candidate) return format_cell(c.mean, c.improvement, c.p_value, c.delta, report.large_effect);
  return fixed(c.mean, 3);
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : "n/a"; }

/// One CSV row per cell.
inline std::string report_csv(const EvalReport& report) {
  std::string out =
      "system,space,metric,model,budget,sampler,status,mean_rmse,repetitions,improvement_pct,p_value,cliffs_delta,"
      "markers,best,cell\n";
  for (const auto& c : report.cells) {
    std::vector<std::string> f{c.key.system,
                               std::string(to_string(c.key.space_mode)),
                               c.key.metric,
                               c.key.model,
                               std::to_string(c.key.budget),
                               c.key.sampler,
                               std::string(to_string(c.status)),
                               c.status == CellStatus::ok ? format_double(c.mean) : "",
                               std::to_string(c.rmses().size()),
                               optional_number(c.improvement),
                               optional_number(c.p_value),
                               optional_number(c.delta),
                               c.markers,
                               c.best ? "1" : "0",
                               render_cell(c, report)};
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + detail::csv_cell(f[i]);
    out += "\n";
  }
  return out;
}

namespace detail {

/// Display width, counting each UTF-8 code point as one column.
inline std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char ch : s) {
    if ((ch & 0xC0) != 0x80) ++w;
  }
  return w;
}

inline std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

}  // namespace detail

/// Aligned table: one line per (system, space, metric, model, budget), one
/// column per sampler. The lowest mean in each line is wrapped in [ ].
inline std::string report_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"system", "space", "metric", "model", "k"};
  for (const auto& s : report.sampler_order) header.push_back(s);
  rows.push_back(header);
  std::vector<const Cell*> firsts;
  for (const auto& c : report.cells) {
    bool seen = false;
    for (const Cell* f : firsts) {
      if (f->key.row() == c.key.row()) seen = true;
    }
    if (!seen) firsts.push_back(&c);
  }
  for (const Cell* f : firsts) {
    std::vector<std::string> line{f->key.system, std::string(to_string(f->key.space_mode)), f->key.metric,
                                  f->key.model, std::to_string(f->key.budget)};
    for (const auto& s : report.sampler_order) {
      CellKey k = f->key;
      k.sampler = s;
      const Cell* c = report.find(k);
      if (!c) {
        line.push_back("failed");
        continue;
      }
      const std::string text = render_cell(*c, report);
      line.push_back(c->best ? "[" + text + "]" : text);
    }
    rows.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], detail::display_width(r[i]));
  }
  std::string out;
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    std::string line;
    for (std::size_t i = 0; i < rows[ri].size(); ++i) {
      line += (i ? "  " : "") + (i + 1 == rows[ri].size() ? rows[ri][i] : detail::pad(rows[ri][i], width[i]));
    }
    out += line + "\n";
    if (ri == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  out += "cells: RMSE mean over repetitions; " + report.candidate + " shows (improvement vs " + report.reference +
         ") then * p<0.05, M/L medium/large Cliff's delta; [ ] marks the lowest mean in a line\n";
  return out;
}

/// Per-repetition records, one JSON object per line, for re-analysis.
inline std::string report_jsonl(const EvalReport& report) {
  std::string out;
  for (const auto& c : report.cells) {
    for (const auto& r : c.reps) {
      Json j;
      j["system"] = c.key.system;
      j["space"] = std::string(to_string(c.key.space_mode));
      j["metric"] = c.key.metric;
      j["model"] = c.key.model;
      j["budget"] = c.key.budget;
      j["sampler"] = c.key.sampler;
      j["repetition"] = r.index;
      j["seed"] = r.seed;
      j["status"] = std::string(to_string(r.status));
      j["rmse"] = r.rmse ? Json(*r.rmse) : Json(nullptr);
      j["train_rows"] = r.train_rows;
      if (!r.predictions.empty()) j["predictions"] = r.predictions;
      if (!r.error.empty()) j["error"] = r.error;
      out += j.dump() + "\n";
    }
  }
  return out;
}

/// Rebuilds a report from per-repetition JSON lines (as written by
/// report_jsonl). Samplers appear in first-seen order.
inline EvalReport report_from_jsonl(const std::string& text, std::string reference = "nsga3",
                                    std::string candidate = "llm4perf", double large = stats::kLargeEffect) {
  EvalReport report;
  report.reference = std::move(reference);
  report.candidate = std::move(candidate);
  report.large_effect = large;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_json(line, "raw line " + std::to_string(line_no));
    CellKey k{j.at("system").get<std::string>(), space_mode_from_string(j.at("space").get<std::string>()),
              j.at("metric").get<std::string>(),  j.at("model").get<std::string>(),
              j.at("budget").get<std::size_t>(),  j.at("sampler").get<std::string>()};
    if (std::find(report.sampler_order.begin(), report.sampler_order.end(), k.sampler) == report.sampler_order.end()) {
      report.sampler_order.push_back(k.sampler);
    }
    Cell* cell = nullptr;
    for (auto& c : report.cells) {
      if (c.key.row() == k.row() && c.key.sampler == k.sampler) cell = &c;
    }
    if (!cell) {
      report.cells.push_back(Cell{});
      cell = &report.cells.back();
      cell->key = k;
    }
    Repetition r;
    r.index = j.at("repetition").get<std::size_t>();
    r.seed = j.value("seed", std::uint64_t{0});
    const auto status = j.value("status", std::string("ok"));
    r.status = status == "ok" ? CellStatus::ok : status == "degenerate" ? CellStatus::degenerate : CellStatus::failed;
    if (j.contains("rmse") && !j["rmse"].is_null()) r.rmse = j["rmse"].get<double>();
    if (j.contains("train_rows")) r.train_rows = j["train_rows"].get<std::vector<std::size_t>>();
    if (j.contains("predictions")) r.predictions = j["predictions"].get<std::vector<double>>();
    r.error = j.value("error", std::string());
    if (r.status == CellStatus::ok && !r.rmse) throw Error(Errc::malformed_json, "raw line " + std::to_string(line_no) + ": ok without rmse");
    cell->reps.push_back(std::move(r));
  }
  for (auto& c : report.cells) {
    std::sort(c.reps.begin(), c.reps.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
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
