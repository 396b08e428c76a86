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

// Learning-rate schedule descriptions and their per-step materialization.
//
// Steps are 1-based. A schedule of `total_steps` produces one learning rate
// per step 1..total_steps; warmup steps are part of that index range.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anneal_law/detail/numeric.hpp"
#include "anneal_law/error.hpp"

namespace anneal_law {

enum class ScheduleKind { constant, cosine, wsd, multi_step_cosine, cyclic, piecewise_linear };

enum class AnnealFn { cosine, linear, exponential, one_sqrt, one_square };

/// One stage of a multi-step cosine schedule: share of the post-warmup steps
/// and the stage's starting LR as a fraction of eta_max.
struct Stage {
  double fraction = 0.0;
  double eta_scale = 1.0;

  bool operator==(const Stage&) const = default;
};

/// One cycle of a cyclic schedule: linear re-warmup to eta_max, then cosine
/// annealing to eta_min.
struct CycleSegment {
  std::int64_t rewarm_steps = 0;
  std::int64_t anneal_steps = 0;

  bool operator==(const CycleSegment&) const = default;
};

struct Knot {
  std::int64_t step = 1;
  double eta = 0.0;

  bool operator==(const Knot&) const = default;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  std::int64_t total_steps = 0;
  std::int64_t warmup_steps = 0;
  double eta_max = 2e-4;
  double eta_min = 0.0;
  std::optional<std::int64_t> cycle_T;     // cosine; defaults to total_steps
  std::optional<std::int64_t> stable_end;  // wsd
  AnnealFn anneal_fn = AnnealFn::cosine;   // wsd
  std::vector<Stage> stage_fractions;      // multi_step_cosine; empty -> default stages
  std::vector<CycleSegment> cycle_spec;    // cyclic
  std::vector<Knot> points;                // piecewise_linear

  /// Throws InputError naming the first offending field.
  void validate() const;

  bool operator==(const ScheduleSpec&) const = default;
};

/// Materialized schedule. `etas` is what the optimizer sees; `area_etas` is
/// the series the areas are integrated over (eta_max held through warmup).
struct LRSeries {
  std::vector<double> etas;
  std::vector<double> area_etas;
  std::int64_t warmup_steps = 0;

  std::size_t size() const noexcept { return etas.size(); }
};

/// DeepSeek-style 80% + 10% + 10% split.
inline std::vector<Stage> default_stages() { return {{0.8, 1.0}, {0.1, 0.316}, {0.1, 0.1}}; }

// ---------------------------------------------------------------------------
// names

inline std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cosine: return "cosine";
    case ScheduleKind::wsd: return "wsd";
    case ScheduleKind::multi_step_cosine: return "multi_step_cosine";
    case ScheduleKind::cyclic: return "cyclic";
    case ScheduleKind::piecewise_linear: return "piecewise_linear";
  }
  return "?";
}

inline std::string_view to_string(AnnealFn f) {
  switch (f) {
    case AnnealFn::cosine: return "cosine";
    case AnnealFn::linear: return "linear";
    case AnnealFn::exponential: return "exponential";
    case AnnealFn::one_sqrt: return "one_sqrt";
    case AnnealFn::one_square: return "one_square";
  }
  return "?";
}

inline ScheduleKind parse_schedule_kind(std::string_view s) {
  for (auto k : {ScheduleKind::constant, ScheduleKind::cosine, ScheduleKind::wsd,
                 ScheduleKind::multi_step_cosine, ScheduleKind::cyclic, ScheduleKind::piecewise_linear}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown schedule kind '" + std::string(s) + "'", "kind");
}

inline AnnealFn parse_anneal_fn(std::string_view s) {
  for (auto f : {AnnealFn::cosine, AnnealFn::linear, AnnealFn::exponential, AnnealFn::one_sqrt,
                 AnnealFn::one_square}) {
    if (to_string(f) == s) return f;
  }
  // accept the dashed spellings used on the command line
  if (s == "1-sqrt" || s == "one-sqrt") return AnnealFn::one_sqrt;
  if (s == "1-square" || s == "one-square") return AnnealFn::one_square;
  throw InputError("unknown annealing function '" + std::string(s) + "'", "anneal_fn");
}

// ---------------------------------------------------------------------------
// annealing functions

/// Floor the exponential annealing decays to before being forced to zero at
/// the final step.
inline constexpr double kExponentialFloor = 1e-3;

/// Fraction of (eta_max - eta_min) retained at step `s` of the annealing
/// phase (T_stable, T_total].
inline double anneal_f(AnnealFn fn, std::int64_t s, std::int64_t t_stable, std::int64_t t_total) {
  if (t_total <= t_stable) throw InputError("annealing phase is empty", "stable_end");
  if (s <= t_stable || s > t_total) {
    throw InputError("step " + std::to_string(s) + " outside annealing phase (" + std::to_string(t_stable) +
                         ", " + std::to_string(t_total) + "]",
                     "step");
  }
  const double u = static_cast<double>(s - t_stable) / static_cast<double>(t_total - t_stable);
  switch (fn) {
    case AnnealFn::cosine: return s == t_total ? 0.0 : 0.5 * (1.0 + std::cos(std::numbers::pi * u));
    case AnnealFn::linear: return 1.0 - u;
    case AnnealFn::exponential: return s == t_total ? 0.0 : std::exp(std::log(kExponentialFloor) * u);
    case AnnealFn::one_sqrt: return 1.0 - std::sqrt(u);
    case AnnealFn::one_square: return 1.0 - u * u;
  }
  throw InputError("unknown annealing function", "anneal_fn");
}

// ---------------------------------------------------------------------------
// validation

inline void ScheduleSpec::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (total_steps < 1) throw InputError("must be >= 1", "total_steps");
  if (warmup_steps < 0) throw InputError("must be >= 0", "warmup_steps");
  if (warmup_steps >= total_steps) throw InputError("must be < total_steps", "warmup_steps");
  if (!std::isfinite(eta_max) || eta_max <= 0.0) throw InputError("must be a positive finite number", "eta_max");
  if (!finite_nonneg(eta_min)) throw InputError("must be a non-negative finite number", "eta_min");
  if (eta_min > eta_max) throw InputError("must be <= eta_max", "eta_min");

  switch (kind) {
    case ScheduleKind::constant: break;
    case ScheduleKind::cosine: {
      const auto t = cycle_T.value_or(total_steps);
      if (t <= warmup_steps) throw InputError("must exceed warmup_steps", "cycle_T");
      break;
    }
    case ScheduleKind::wsd: {
      if (!stable_end) throw InputError("required for wsd schedules", "stable_end");
      if (*stable_end < warmup_steps) throw InputError("must be >= warmup_steps", "stable_end");
      if (*stable_end > total_steps) throw InputError("must be <= total_steps", "stable_end");
      break;
    }
    case ScheduleKind::multi_step_cosine: {
      const auto stages = stage_fractions.empty() ? default_stages() : stage_fractions;
      double sum = 0.0;
      for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto field = "stage_fractions[" + std::to_string(i) + "]";
        if (!(stages[i].fraction > 0.0) || !std::isfinite(stages[i].fraction))
          throw InputError("fraction must be positive", field);
        if (!(stages[i].eta_scale > 0.0) || stages[i].eta_scale > 1.0)
          throw InputError("eta_scale must be in (0, 1]", field);
        sum += stages[i].fraction;
      }
      if (std::fabs(sum - 1.0) > 1e-9) throw InputError("fractions must sum to 1", "stage_fractions");
      if (total_steps - warmup_steps < static_cast<std::int64_t>(stages.size()))
        throw InputError("fewer post-warmup steps than stages", "stage_fractions");
      break;
    }
    case ScheduleKind::cyclic: {
      if (cycle_spec.empty()) throw InputError("at least one cycle required", "cycle_spec");
      std::int64_t used = warmup_steps;
      for (std::size_t i = 0; i < cycle_spec.size(); ++i) {
        const auto& c = cycle_spec[i];
        const auto field = "cycle_spec[" + std::to_string(i) + "]";
        if (c.rewarm_steps < 0 || c.anneal_steps < 0) throw InputError("phase lengths must be >= 0", field);
        if (c.rewarm_steps + c.anneal_steps == 0) throw InputError("empty cycle", field);
        used += c.rewarm_steps + c.anneal_steps;
        if (used > total_steps) throw InputError("cycle phases exceed total_steps", field);
      }
      break;
    }
    case ScheduleKind::piecewise_linear: {
      if (points.empty()) throw InputError("at least one knot required", "points");
      for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const auto field = "points[" + std::to_string(i) + "]";
        if (p.step < 1 || p.step > total_steps) throw InputError("step must be in [1, total_steps]", field);
        if (i > 0 && p.step <= points[i - 1].step) throw InputError("knot steps must be strictly increasing", field);
        if (!finite_nonneg(p.eta) || p.eta > eta_max) throw InputError("eta must be in [0, eta_max]", field);
      }
      if (warmup_steps > 0 && points.front().step != 1 && points.front().step <= warmup_steps)
        throw InputError("first knot must be at step 1 or after warmup", "points[0]");
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// materialization

namespace detail {

inline double half_cosine(double u) { return 0.5 * (1.0 + std::cos(std::numbers::pi * u)); }

}  // namespace detail

/// Per-step learning rates for `spec`. Deterministic: equal specs give
/// bit-identical series.
inline LRSeries materialize(const ScheduleSpec& spec) {
  spec.validate();
  const auto total = spec.total_steps;
  const auto warm = spec.warmup_steps;
  const double hi = spec.eta_max;
  const double lo = spec.eta_min;

  LRSeries out;
  out.warmup_steps = warm;
  out.etas.assign(static_cast<std::size_t>(total), hi);
  auto eta = [&](std::int64_t step) -> double& { return out.etas[static_cast<std::size_t>(step - 1)]; };

  switch (spec.kind) {
    case ScheduleKind::constant: break;

    case ScheduleKind::cosine: {
      const auto cycle = spec.cycle_T.value_or(total);
      const double span = static_cast<double>(cycle - warm);
      for (auto i = warm + 1; i <= total; ++i) {
        if (i >= cycle) {
          eta(i) = lo;
        } else {
          eta(i) = lo + (hi - lo) * detail::half_cosine(static_cast<double>(i - warm) / span);
        }
      }
      break;
    }

    case ScheduleKind::wsd: {
      const auto stable = *spec.stable_end;
      for (auto i = stable + 1; i <= total; ++i) eta(i) = lo + anneal_f(spec.anneal_fn, i, stable, total) * (hi - lo);
      break;
    }

    case ScheduleKind::multi_step_cosine: {
      const auto stages = spec.stage_fractions.empty() ? default_stages() : spec.stage_fractions;
      const double post = static_cast<double>(total - warm);
      double cum = 0.0;
      std::int64_t begin = warm;  // last step of the previous stage
      for (std::size_t k = 0; k < stages.size(); ++k) {
        cum += stages[k].fraction;
        const std::int64_t end =
            k + 1 == stages.size() ? total : warm + static_cast<std::int64_t>(std::llround(cum * post));
        const double top = stages[k].eta_scale * hi;
        const double bottom = k + 1 == stages.size() ? std::min(lo, top) : std::max(lo, stages[k + 1].eta_scale * hi);
        const double len = static_cast<double>(end - begin);
        for (auto i = begin + 1; i <= end; ++i) {
          eta(i) = bottom + (top - bottom) * detail::half_cosine(static_cast<double>(i - begin) / len);
        }
        begin = std::max(begin, end);
      }
      break;
    }

    case ScheduleKind::cyclic: {
      double current = hi;
      std::int64_t i = warm;
      for (const auto& c : spec.cycle_spec) {
        const double from = current;
        for (std::int64_t j = 1; j <= c.rewarm_steps; ++j) {
          eta(++i) = from + (hi - from) * static_cast<double>(j) / static_cast<double>(c.rewarm_steps);
        }
        if (c.rewarm_steps > 0) current = hi;
        for (std::int64_t j = 1; j <= c.anneal_steps; ++j) {
          eta(++i) = lo + (current - lo) * detail::half_cosine(static_cast<double>(j) / static_cast<double>(c.anneal_steps));
        }
        if (c.anneal_steps > 0) current = lo;
      }
      for (++i; i <= total; ++i) eta(i) = current;
      break;
    }

    case ScheduleKind::piecewise_linear: {
      const auto& pts = spec.points;
      std::size_t seg = 0;
      for (auto i = warm + 1; i <= total; ++i) {
        if (i <= pts.front().step) {
          eta(i) = pts.front().eta;
        } else if (i >= pts.back().step) {
          eta(i) = pts.back().eta;
        } else {
          while (pts[seg + 1].step < i) ++seg;
          const auto& a = pts[seg];
          const auto& b = pts[seg + 1];
          const double t = static_cast<double>(i - a.step) / static_cast<double>(b.step - a.step);
          eta(i) = a.eta + (b.eta - a.eta) * t;
        }
      }
      break;
    }
  }

  out.area_etas = out.etas;
  for (std::int64_t i = 1; i <= warm; ++i) {
    eta(i) = hi * static_cast<double>(i) / static_cast<double>(warm);
  }
  return out;
}

/// CSV with header `step,lr`.
inline void write_lr_csv(std::ostream& os, const LRSeries& series) {
  os << "step,lr\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << (i + 1) << ',' << detail::format_double(series.etas[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline void reject_unknown_fields(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                                  const std::string& where) {
  if (!j.is_object()) throw InputError("expected a JSON object", where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw InputError("unknown field", where.empty() ? it.key() : where + "." + it.key());
    }
  }
}

inline std::int64_t json_int(const nlohmann::json& j, const std::string& field) {
  if (j.is_number_integer() || j.is_number_unsigned()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (std::isfinite(d) && std::floor(d) == d) return static_cast<std::int64_t>(d);
  }
  throw InputError("expected an integer", field);
}

inline double json_real(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) throw InputError("expected a number", field);
  return j.get<double>();
}

inline std::pair<nlohmann::json, nlohmann::json> json_pair(const nlohmann::json& j, const std::string& field) {
  if (j.is_array() && j.size() == 2) return {j[0], j[1]};
  throw InputError("expected a two-element array", field);
}

}  // namespace detail

inline nlohmann::json to_json(const ScheduleSpec& s) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(s.kind));
  j["total_steps"] = s.total_steps;
  j["warmup_steps"] = s.warmup_steps;
  j["eta_max"] = s.eta_max;
  j["eta_min"] = s.eta_min;
  if (s.cycle_T) j["cycle_T"] = *s.cycle_T;
  if (s.stable_end) j["stable_end"] = *s.stable_end;
  if (s.kind == ScheduleKind::wsd) j["anneal_fn"] = std::string(to_string(s.anneal_fn));
  if (!s.stage_fractions.empty()) {
    auto& a = j["stage_fractions"] = nlohmann::json::array();
    for (const auto& st : s.stage_fractions) a.push_back({st.fraction, st.eta_scale});
  }
  if (!s.cycle_spec.empty()) {
    auto& a = j["cycle_spec"] = nlohmann::json::array();
    for (const auto& c : s.cycle_spec) a.push_back({c.rewarm_steps, c.anneal_steps});
  }
  if (!s.points.empty()) {
    auto& a = j["points"] = nlohmann::json::array();
    for (const auto& p : s.points) a.push_back({p.step, p.eta});
  }
  return j;
}

/// Strict parse: unknown fields and wrong types are InputErrors. The result
/// is validated.
inline ScheduleSpec schedule_from_json(const nlohmann::json& j) {
  using namespace detail;
  reject_unknown_fields(j,
                        {"kind", "total_steps", "warmup_steps", "eta_max", "eta_min", "cycle_T", "stable_end",
                         "anneal_fn", "stage_fractions", "cycle_spec", "points"},
                        "");
  ScheduleSpec s;
  if (!j.contains("kind") || !j["kind"].is_string()) throw InputError("required string", "kind");
  s.kind = parse_schedule_kind(j["kind"].get<std::string>());
  if (!j.contains("total_steps")) throw InputError("required", "total_steps");
  s.total_steps = json_int(j["total_steps"], "total_steps");
  if (j.contains("warmup_steps")) s.warmup_steps = json_int(j["warmup_steps"], "warmup_steps");
  if (!j.contains("eta_max")) throw InputError("required", "eta_max");
  s.eta_max = json_real(j["eta_max"], "eta_max");
  if (j.contains("eta_min")) s.eta_min = json_real(j["eta_min"], "eta_min");
  if (j.contains("cycle_T")) s.cycle_T = json_int(j["cycle_T"], "cycle_T");
  if (j.contains("stable_end")) s.stable_end = json_int(j["stable_end"], "stable_end");
  if (j.contains("anneal_fn")) {
    if (!j["anneal_fn"].is_string()) throw InputError("expected a string", "anneal_fn");
    s.anneal_fn = parse_anneal_fn(j["anneal_fn"].get<std::string>());
  }
  auto list = [&](const char* key) -> const nlohmann::json* {
    if (!j.contains(key)) return nullptr;
    if (!j[key].is_array()) throw InputError("expected an array", key);
    return &j[key];
  };
  if (auto* a = list("stage_fractions")) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto f = "stage_fractions[" + std::to_string(i) + "]";
      auto [x, y] = json_pair((*a)[i], f);
      s.stage_fractions.push_back({json_real(x, f), json_real(y, f)});
    }
  }
  if (auto* a = list("cycle_spec")) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto f = "cycle_spec[" + std::to_string(i) + "]";
      auto [x, y] = json_pair((*a)[i], f);
      s.cycle_spec.push_back({json_int(x, f), json_int(y, f)});
    }
  }
  if (auto* a = list("points")) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto f = "points[" + std::to_string(i) + "]";
      auto [x, y] = json_pair((*a)[i], f);
      s.points.push_back({json_int(x, f), json_real(y, f)});
    }
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// convenience constructors

inline ScheduleSpec constant_schedule(std::int64_t total, double eta_max, std::int64_t warmup = 0) {
  ScheduleSpec s;
  s.kind = ScheduleKind::constant;
  s.total_steps = total;
  s.warmup_steps = warmup;
  s.eta_max = eta_max;
  s.eta_min = eta_max;
  return s;
}

inline ScheduleSpec cosine_schedule(std::int64_t total, double eta_max, double eta_min, std::int64_t warmup = 0,
                                    std::optional<std::int64_t> cycle = std::nullopt) {
  ScheduleSpec s;
  s.kind = ScheduleKind::cosine;
  s.total_steps = total;
  s.warmup_steps = warmup;
  s.eta_max = eta_max;
  s.eta_min = eta_min;
  s.cycle_T = cycle.value_or(total);
  return s;
}

/// WSD with the final `round(ratio * total)` steps annealed. The stable phase
/// never starts before warmup ends, so ratio 1 equals a full cosine when
/// `fn` is cosine.
inline ScheduleSpec wsd_schedule(std::int64_t total, double eta_max, double eta_min, double ratio, AnnealFn fn,
                                 std::int64_t warmup = 0) {
  if (!(ratio > 0.0) || ratio > 1.0) throw InputError("annealing ratio must be in (0, 1]", "ratio");
  ScheduleSpec s;
  s.kind = ScheduleKind::wsd;
  s.total_steps = total;
  s.warmup_steps = warmup;
  s.eta_max = eta_max;
  s.eta_min = eta_min;
  s.anneal_fn = fn;
  const auto anneal = std::max<std::int64_t>(1, std::llround(ratio * static_cast<double>(total)));
  s.stable_end = std::max(warmup, total - anneal);
  return s;
}

}  // namespace anneal_law
