/*
 * Copyright 2026 The anneal-law Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Loss-curve ingestion from exported training logs (CSV or JSON lines).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anneal_law/detail/numeric.hpp"
#include "anneal_law/error.hpp"
#include "anneal_law/fit.hpp"
#include "anneal_law/schedule.hpp"

namespace anneal_law {

enum class LogFormat { csv, json_lines };

inline std::string_view to_string(LogFormat f) { return f == LogFormat::csv ? "csv" : "json_lines"; }

inline LogFormat parse_log_format(std::string_view s) {
  if (s == "csv") return LogFormat::csv;
  if (s == "json_lines" || s == "jsonl" || s == "json-lines") return LogFormat::json_lines;
  throw InputError("unknown log format '" + std::string(s) + "'", "format");
}

/// Picks the format from the file extension: .jsonl / .ndjson are JSON
/// lines, anything else CSV.
inline LogFormat guess_log_format(std::string_view path) {
  auto ends = [&](std::string_view suf) { return path.size() >= suf.size() && path.substr(path.size() - suf.size()) == suf; };
  return ends(".jsonl") || ends(".ndjson") ? LogFormat::json_lines : LogFormat::csv;
}

struct LogRow {
  std::int64_t step = 0;
  double value = 0.0;
  std::optional<double> lr;
  std::optional<double> tokens;

  bool operator==(const LogRow&) const = default;
};

struct RawLog {
  /// Sorted by step, one row per step.
  std::vector<LogRow> rows;
  LogFormat source_format = LogFormat::csv;
  std::string value_column = "loss";
  std::size_t malformed_rows = 0;
  std::size_t duplicate_rows = 0;
};

struct ColumnMap {
  /// Empty: derive steps from `tokens` and the batch size.
  std::string step = "step";
  std::string value = "loss";
  std::optional<std::string> lr;
  std::optional<std::string> tokens;
};

struct ParseOptions {
  LogFormat format = LogFormat::csv;
  ColumnMap columns;
  /// Abort when more than this fraction of data rows is malformed.
  double max_malformed_fraction = 0.05;
  /// Tokens per step; steps = round(tokens / batch_size_tokens).
  std::optional<double> batch_size_tokens;
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline void validate_parse_options(const ParseOptions& o) {
  if (o.columns.value.empty()) throw InputError("must not be empty", "columns.value");
  if (o.columns.step.empty() && !(o.columns.tokens && o.batch_size_tokens))
    throw InputError("either a step column or a tokens column with a batch size is required", "columns.step");
  if (o.batch_size_tokens && !(*o.batch_size_tokens > 0.0)) throw InputError("must be positive", "batch_size_tokens");
  if (!(o.max_malformed_fraction >= 0.0 && o.max_malformed_fraction <= 1.0))
    throw InputError("must be in [0, 1]", "max_malformed_fraction");
}

/// Raw cells of one row, before typing.
struct Cells {
  std::optional<std::string> step, value, lr, tokens;
};

inline std::optional<LogRow> type_row(const Cells& c, const ParseOptions& o) {
  LogRow row;
  auto value = c.value ? parse_double(*c.value) : std::nullopt;
  if (!value || !std::isfinite(*value)) return std::nullopt;
  row.value = *value;
  auto optional_real = [](const std::optional<std::string>& cell, std::optional<double>& dst) {
    if (!cell || trim(*cell).empty()) return true;
    auto v = parse_double(*cell);
    if (!v || !std::isfinite(*v)) return false;
    dst = *v;
    return true;
  };
  if (!optional_real(c.lr, row.lr) || !optional_real(c.tokens, row.tokens)) return std::nullopt;
  if (!o.columns.step.empty()) {
    auto step = c.step ? parse_step(*c.step) : std::nullopt;
    if (!step) return std::nullopt;
    row.step = *step;
  } else {
    if (!row.tokens) return std::nullopt;
    row.step = std::llround(*row.tokens / *o.batch_size_tokens);
  }
  return row;
}

inline RawLog finish(std::vector<LogRow> rows, std::size_t data_rows, std::size_t malformed, const ParseOptions& o) {
  if (data_rows > 0 && static_cast<double>(malformed) > o.max_malformed_fraction * static_cast<double>(data_rows)) {
    throw InputError(std::to_string(malformed) + " of " + std::to_string(data_rows) +
                         " rows are malformed (limit " + format_double(100.0 * o.max_malformed_fraction) + "%)",
                     "rows");
  }
  // last write wins; stable sort keeps file order among equal steps
  std::stable_sort(rows.begin(), rows.end(), [](const LogRow& a, const LogRow& b) { return a.step < b.step; });
  RawLog log;
  log.source_format = o.format;
  log.value_column = o.columns.value;
  log.malformed_rows = malformed;
  for (auto& r : rows) {
    if (!log.rows.empty() && log.rows.back().step == r.step) {
      log.rows.back() = r;
      ++log.duplicate_rows;
    } else {
      log.rows.push_back(r);
    }
  }
  return log;
}

inline RawLog parse_csv(std::istream& in, const ParseOptions& o) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    for (auto h : split_csv(line)) header.emplace_back(h);
    break;
  }
  if (header.empty()) throw InputError("missing header row", "header");
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("column '" + name + "' not found in header", "columns");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto step_col = o.columns.step.empty() ? std::nullopt : column(o.columns.step);
  const auto value_col = column(o.columns.value);
  const auto lr_col = o.columns.lr ? column(*o.columns.lr) : std::nullopt;
  const auto tokens_col = o.columns.tokens ? column(*o.columns.tokens) : std::nullopt;

  std::vector<LogRow> rows;
  std::size_t data_rows = 0, malformed = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_rows;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      ++malformed;
      continue;
    }
    auto cell = [&](const std::optional<std::size_t>& c) -> std::optional<std::string> {
      if (!c) return std::nullopt;
      return std::string(fields[*c]);
    };
    auto row = type_row({cell(step_col), cell(value_col), cell(lr_col), cell(tokens_col)}, o);
    if (!row) {
      ++malformed;
      continue;
    }
    rows.push_back(*row);
  }
  return finish(std::move(rows), data_rows, malformed, o);
}

inline RawLog parse_json_lines(std::istream& in, const ParseOptions& o) {
  std::string line;
  std::vector<LogRow> rows;
  std::size_t data_rows = 0, malformed = 0;
  std::map<std::string, bool> seen;
  auto cell = [](const nlohmann::json& j, const std::optional<std::string>& key) -> std::optional<std::string> {
    if (!key || key->empty() || !j.contains(*key)) return std::nullopt;
    const auto& v = j[*key];
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return std::string("?");
  };
  std::vector<std::string> required{o.columns.value};
  if (!o.columns.step.empty()) required.push_back(o.columns.step);
  else required.push_back(*o.columns.tokens);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_rows;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++malformed;
      continue;
    }
    for (const auto& k : required) seen[k] = seen[k] || j.contains(k);
    auto row = type_row({cell(j, o.columns.step), cell(j, o.columns.value), cell(j, o.columns.lr), cell(j, o.columns.tokens)}, o);
    if (!row) {
      ++malformed;
      continue;
    }
    rows.push_back(*row);
  }
  if (data_rows > 0) {
    for (const auto& k : required)
      if (!seen[k]) throw InputError("column '" + k + "' not found in any record", "columns");
  }
  return finish(std::move(rows), data_rows, malformed, o);
}

}  // namespace detail

inline RawLog parse_log(std::istream& in, const ParseOptions& options = {}) {
  detail::validate_parse_options(options);
  return options.format == LogFormat::csv ? detail::parse_csv(in, options) : detail::parse_json_lines(in, options);
}

inline RawLog parse_log_file(const std::string& path, const ParseOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  return parse_log(in, options);
}

/// CSV with header `step,<value_column>[,lr][,tokens]`; shortest round-trip
/// number formatting, so parsing the output reproduces the rows exactly.
inline void serialize_csv(std::ostream& os, const RawLog& log) {
  using detail::format_double;
  const bool has_lr = std::any_of(log.rows.begin(), log.rows.end(), [](const LogRow& r) { return r.lr.has_value(); });
  const bool has_tokens =
      std::any_of(log.rows.begin(), log.rows.end(), [](const LogRow& r) { return r.tokens.has_value(); });
  os << "step," << log.value_column;
  if (has_lr) os << ",lr";
  if (has_tokens) os << ",tokens";
  os << '\n';
  for (const auto& r : log.rows) {
    os << r.step << ',' << format_double(r.value);
    if (has_lr) os << ',' << (r.lr ? format_double(*r.lr) : "");
    if (has_tokens) os << ',' << (r.tokens ? format_double(*r.tokens) : "");
    os << '\n';
  }
}

/// Column map matching serialize_csv's output for `log`.
inline ColumnMap serialized_columns(const RawLog& log) {
  ColumnMap m;
  m.value = log.value_column;
  if (std::any_of(log.rows.begin(), log.rows.end(), [](const LogRow& r) { return r.lr.has_value(); })) m.lr = "lr";
  if (std::any_of(log.rows.begin(), log.rows.end(), [](const LogRow& r) { return r.tokens.has_value(); }))
    m.tokens = "tokens";
  return m;
}

struct CurveOptions {
  std::int64_t stride = 1;
  /// Centered moving-average width, odd; 1 disables smoothing. The window is
  /// truncated at both ends of the log.
  std::int64_t smooth_window = 1;
  /// Exclude samples at steps <= the schedule's warmup.
  bool drop_warmup = false;
  std::string label;
  std::optional<double> n;
};

/// Aligns `log` with `spec` by absolute step. Smoothing runs over the whole
/// log before warmup filtering and striding.
inline LossCurve to_loss_curve(const RawLog& log, const ScheduleSpec& spec, const CurveOptions& opts = {}) {
  spec.validate();
  if (opts.stride < 1) throw InputError("must be >= 1", "stride");
  if (opts.smooth_window < 1 || opts.smooth_window % 2 == 0) throw InputError("must be a positive odd integer", "smooth_window");
  for (const auto& r : log.rows) {
    if (r.step < 1 || r.step > spec.total_steps)
      throw InputError("log step " + std::to_string(r.step) + " outside schedule steps [1, " +
                           std::to_string(spec.total_steps) + "]",
                       "steps");
  }
  const auto n = log.rows.size();
  const auto half = static_cast<std::size_t>(opts.smooth_window / 2);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (half == 0) {
      values[i] = log.rows[i].value;
      continue;
    }
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += log.rows[k].value;
    values[i] = sum / static_cast<double>(hi - lo + 1);
  }
  LossCurve curve;
  curve.schedule = spec;
  curve.label = opts.label;
  curve.n = opts.n;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (opts.drop_warmup && log.rows[i].step <= spec.warmup_steps) continue;
    if (kept++ % static_cast<std::size_t>(opts.stride) != 0) continue;
    curve.samples.push_back({log.rows[i].step, values[i]});
  }
  if (curve.samples.empty()) throw InputError("no samples left after filtering", "samples");
  curve.validate();
  return curve;
}

}  // namespace anneal_law
