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

// Schedule studies built on the law: sweeps, crossovers, decomposition,
// continual pre-training predictions, the endpoint power-law reduction
// experiment and the fitting-cost table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "anneal_law/area.hpp"
#include "anneal_law/detail/numeric.hpp"
#include "anneal_law/detail/parallel.hpp"
#include "anneal_law/error.hpp"
#include "anneal_law/fit.hpp"
#include "anneal_law/law.hpp"
#include "anneal_law/rng.hpp"
#include "anneal_law/schedule.hpp"

namespace anneal_law {

/// Settings shared by every generated schedule in a study.
struct SweepContext {
  double eta_max = 2e-4;
  std::int64_t warmup = 500;
  double lambda = 0.999;
  /// Keep the full predicted curve of every cell.
  bool keep_curves = false;

  AreaConfig area_config() const { return {lambda, 0.0}; }
};

struct Prediction {
  LRSeries series;
  AreaSeries areas;
  std::vector<double> loss;
};

/// Materializes `spec`, integrates its areas and evaluates the law. With the
/// model-size extension present, `n` selects the model size.
inline Prediction predict(const LawParams& params, const ScheduleSpec& spec, const AreaConfig& area = {},
                          std::optional<double> n = std::nullopt) {
  params.validate();
  Prediction p;
  p.series = materialize(spec);
  p.areas = compute_areas(p.series, area);
  p.loss = n ? eval_curve_n(params, p.areas, *n) : eval_curve(params, p.areas);
  return p;
}

inline double final_loss(const LawParams& params, const ScheduleSpec& spec, const AreaConfig& area = {}) {
  return predict(params, spec, area).loss.back();
}

struct Decomposition {
  double L0 = 0.0;
  /// A * S1^-alpha
  std::vector<double> s1_term;
  /// -C * S2
  std::vector<double> s2_term;
};

inline Decomposition decompose(const LawParams& params, const ScheduleSpec& spec, double lambda = 0.999) {
  params.validate();
  const auto areas = compute_areas(materialize(spec), {lambda, 0.0});
  Decomposition d;
  d.L0 = params.L0;
  d.s1_term.resize(areas.size());
  d.s2_term.resize(areas.size());
  for (std::size_t i = 0; i < areas.size(); ++i) {
    d.s1_term[i] = params.A * std::pow(areas.s1[i], -params.alpha);
    d.s2_term[i] = -params.C * detail::s2_power(areas.s2[i], params.zeta);
  }
  return d;
}

// ---------------------------------------------------------------------------
// sweeps

struct GroupArgmin {
  nlohmann::json key;
  std::size_t index = 0;
};

struct SweepResult {
  std::string kind;
  /// One descriptor object per cell.
  std::vector<nlohmann::json> axis;
  std::vector<double> final_losses;
  /// Lowest final loss; ties go to the smallest index.
  std::size_t argmin_index = 0;
  /// Argmin within each group of cells (per total, per ratio, ...).
  std::vector<GroupArgmin> group_argmins;
  std::optional<std::vector<std::vector<double>>> full_curves;
};

namespace detail {

inline std::size_t argmin(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

/// Evaluates every cell in parallel and fills final losses, curves and the
/// global argmin.
inline SweepResult run_cells(std::string kind, std::vector<nlohmann::json> axis, const std::vector<ScheduleSpec>& specs,
                             const LawParams& params, const SweepContext& ctx) {
  params.validate();
  if (specs.empty()) throw InputError("empty grid", "grid");
  for (const auto& s : specs) s.validate();
  SweepResult r;
  r.kind = std::move(kind);
  r.axis = std::move(axis);
  r.final_losses.resize(specs.size());
  std::vector<std::vector<double>> curves(ctx.keep_curves ? specs.size() : 0);
  parallel_for(specs.size(), [&](std::size_t i) {
    auto p = predict(params, specs[i], ctx.area_config());
    r.final_losses[i] = p.loss.back();
    if (ctx.keep_curves) curves[i] = std::move(p.loss);
  });
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (!std::isfinite(r.final_losses[i]))
      throw DomainError("non-finite predicted loss in grid cell " + std::to_string(i));
  r.argmin_index = argmin(r.final_losses);
  if (ctx.keep_curves) r.full_curves = std::move(curves);
  return r;
}

/// Group argmins over consecutive blocks of `block` cells.
inline void block_argmins(SweepResult& r, std::size_t block, const std::vector<nlohmann::json>& keys) {
  for (std::size_t g = 0; g < keys.size(); ++g) {
    std::span<const double> part(r.final_losses.data() + g * block, block);
    r.group_argmins.push_back({keys[g], g * block + argmin(part)});
  }
}

inline void require_nonempty(std::size_t n, const char* field) {
  if (n == 0) throw InputError("must not be empty", field);
}

}  // namespace detail

inline std::vector<double> default_cycle_factors() { return {0.5, 0.75, 1.0, 1.25, 1.5, 2.0}; }
inline std::vector<double> default_min_lr_fracs() { return {0.0, 0.1}; }
inline std::vector<double> default_wsd_ratios() {
  return {0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6};
}
inline std::vector<AnnealFn> default_anneal_fns() {
  return {AnnealFn::cosine, AnnealFn::linear, AnnealFn::one_sqrt, AnnealFn::one_square};
}

/// Final loss for cosine schedules with cycle T = factor * total and
/// eta_min = frac * eta_max.
inline SweepResult sweep_cosine(const LawParams& params, std::int64_t total, std::span<const double> cycle_factors,
                                std::span<const double> min_lr_fracs, const SweepContext& ctx = {}) {
  detail::require_nonempty(cycle_factors.size(), "cycle_factors");
  detail::require_nonempty(min_lr_fracs.size(), "min_lr_fracs");
  std::vector<nlohmann::json> axis;
  std::vector<ScheduleSpec> specs;
  for (double f : cycle_factors) {
    if (!(f > 0.0)) throw InputError("cycle factors must be positive", "cycle_factors");
    const auto t = std::llround(f * static_cast<double>(total));
    for (double m : min_lr_fracs) {
      if (!(m >= 0.0 && m <= 1.0)) throw InputError("must be in [0, 1]", "min_lr_fracs");
      specs.push_back(cosine_schedule(total, ctx.eta_max, m * ctx.eta_max, ctx.warmup, t));
      axis.push_back({{"cycle_factor", f}, {"cycle_T", t}, {"min_lr_frac", m}, {"eta_min", m * ctx.eta_max}});
    }
  }
  return detail::run_cells("cosine", std::move(axis), specs, params, ctx);
}

struct CrossoverResult {
  SweepResult constant;
  SweepResult cosine;
  /// Forward area where |dL/dS1| = C.
  double s1_star = 0.0;
  /// s1_star expressed in steps at eta_max.
  double s1_star_steps = 0.0;
  /// First total at which cosine beats constant, after constant led.
  std::optional<std::int64_t> crossover_total;
};

inline CrossoverResult crossover_constant_cosine(const LawParams& params, std::span<const std::int64_t> totals,
                                                 const SweepContext& ctx = {}) {
  detail::require_nonempty(totals.size(), "totals");
  std::vector<nlohmann::json> axis;
  std::vector<ScheduleSpec> constant, cosine;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    if (i > 0 && totals[i] <= totals[i - 1]) throw InputError("totals must be increasing", "totals");
    constant.push_back(constant_schedule(totals[i], ctx.eta_max, ctx.warmup));
    cosine.push_back(cosine_schedule(totals[i], ctx.eta_max, 0.0, ctx.warmup));
    axis.push_back({{"total_steps", totals[i]}});
  }
  CrossoverResult r;
  r.constant = detail::run_cells("constant", axis, constant, params, ctx);
  r.cosine = detail::run_cells("cosine", axis, cosine, params, ctx);
  r.s1_star = crossover_area(params);
  r.s1_star_steps = r.s1_star / ctx.eta_max;
  bool constant_led = false;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    const bool cosine_wins = r.cosine.final_losses[i] < r.constant.final_losses[i];
    if (!cosine_wins) constant_led = true;
    if (cosine_wins && constant_led) {
      r.crossover_total = totals[i];
      break;
    }
  }
  return r;
}

/// Final loss of WSD schedules per (total, annealing ratio); group argmins
/// are per total.
inline SweepResult sweep_wsd(const LawParams& params, std::span<const std::int64_t> totals,
                             std::span<const double> ratios, AnnealFn fn = AnnealFn::cosine,
                             const SweepContext& ctx = {}, double eta_min = 0.0) {
  detail::require_nonempty(totals.size(), "totals");
  detail::require_nonempty(ratios.size(), "ratios");
  std::vector<nlohmann::json> axis, keys;
  std::vector<ScheduleSpec> specs;
  for (auto total : totals) {
    keys.push_back({{"total_steps", total}});
    for (double r : ratios) {
      if (!(r > 0.0 && r <= 1.0)) throw InputError("ratios must be in (0, 1]", "ratios");
      specs.push_back(wsd_schedule(total, ctx.eta_max, eta_min, r, fn, ctx.warmup));
      axis.push_back({{"total_steps", total}, {"ratio", r}, {"anneal_fn", std::string(to_string(fn))}});
    }
  }
  auto res = detail::run_cells("wsd", std::move(axis), specs, params, ctx);
  detail::block_argmins(res, ratios.size(), keys);
  return res;
}

/// Final loss per (annealing function, ratio) at one total; group argmins
/// are per ratio.
inline SweepResult compare_anneal_fns(const LawParams& params, std::int64_t total, std::span<const double> ratios,
                                      std::span<const AnnealFn> fns, const SweepContext& ctx = {},
                                      double eta_min = 0.0) {
  detail::require_nonempty(ratios.size(), "ratios");
  detail::require_nonempty(fns.size(), "fns");
  std::vector<nlohmann::json> axis;
  std::vector<ScheduleSpec> specs;
  for (auto fn : fns) {
    for (double r : ratios) {
      if (!(r > 0.0 && r <= 1.0)) throw InputError("ratios must be in (0, 1]", "ratios");
      specs.push_back(wsd_schedule(total, ctx.eta_max, eta_min, r, fn, ctx.warmup));
      axis.push_back({{"anneal_fn", std::string(to_string(fn))}, {"ratio", r}, {"total_steps", total}});
    }
  }
  auto res = detail::run_cells("anneal-fn", std::move(axis), specs, params, ctx);
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    std::size_t best = k;
    for (std::size_t f = 1; f < fns.size(); ++f) {
      const auto i = f * ratios.size() + k;
      if (res.final_losses[i] < res.final_losses[best]) best = i;
    }
    res.group_argmins.push_back({{{"ratio", ratios[k]}}, best});
  }
  return res;
}

// ---------------------------------------------------------------------------
// continual pre-training

struct CptCurve {
  double peak = 0.0;
  std::int64_t rewarm_steps = 0;
  /// Steps 1..base_steps are the completed run; the continuation follows.
  std::int64_t base_steps = 0;
  std::vector<double> etas;
  std::vector<double> s2;
  std::vector<double> loss;
  double final_loss = 0.0;
  /// Maximum predicted loss after the continuation starts.
  double peak_loss = 0.0;
};

/// Completed base run of `base_steps`: cosine to 0.1 * eta_max with the
/// context's warmup.
inline ScheduleSpec default_cpt_base(std::int64_t base_steps, const SweepContext& ctx = {}) {
  return cosine_schedule(base_steps, ctx.eta_max, 0.1 * ctx.eta_max, ctx.warmup);
}

/// Predicts curves for a completed `base` run continued with `continuation`,
/// where the continuation's warmup is replaced by a linear re-warmup from the
/// base's final LR to each peak over each number of steps. The re-warmup
/// enters the areas with its actual LRs, so S2 falls while the LR rises.
/// Curves are ordered peak-major.
inline std::vector<CptCurve> cpt_predict(const LawParams& params, const ScheduleSpec& base,
                                         std::span<const double> rewarm_peaks,
                                         std::span<const std::int64_t> rewarm_steps,
                                         const ScheduleSpec& continuation, double lambda = 0.999) {
  params.validate();
  continuation.validate();
  detail::require_nonempty(rewarm_peaks.size(), "rewarm_peaks");
  detail::require_nonempty(rewarm_steps.size(), "rewarm_steps");
  for (double p : rewarm_peaks) {
    if (!(p > 0.0) || !std::isfinite(p)) throw InputError("peaks must be positive", "rewarm_peaks");
    if (p > continuation.eta_max)
      throw InputError("peak " + detail::format_double(p) + " exceeds the continuation eta_max " +
                           detail::format_double(continuation.eta_max),
                       "rewarm_peaks");
  }
  for (auto r : rewarm_steps) {
    if (r < 1) throw InputError("must be >= 1", "rewarm_steps");
    if (r >= continuation.total_steps)
      throw InputError("continuation must be longer than every re-warmup", "rewarm_steps");
  }
  const auto base_series = materialize(base);
  const double start_lr = base_series.etas.back();

  std::vector<std::pair<double, std::int64_t>> cells;
  for (double p : rewarm_peaks)
    for (auto r : rewarm_steps) cells.emplace_back(p, r);
  std::vector<CptCurve> out(cells.size());
  detail::parallel_for(cells.size(), [&](std::size_t k) {
    const auto [peak, steps] = cells[k];
    auto spec = continuation;
    spec.eta_max = peak;
    spec.eta_min = std::min(spec.eta_min, peak);
    spec.warmup_steps = steps;
    auto cont = materialize(spec);
    for (std::int64_t i = 0; i < steps; ++i) {
      const double u = static_cast<double>(i + 1) / static_cast<double>(steps);
      cont.etas[static_cast<std::size_t>(i)] = start_lr + (peak - start_lr) * u;
    }
    LRSeries joined;
    joined.warmup_steps = base_series.warmup_steps;
    joined.etas = base_series.etas;
    joined.etas.insert(joined.etas.end(), cont.etas.begin(), cont.etas.end());
    joined.area_etas = base_series.area_etas;
    joined.area_etas.insert(joined.area_etas.end(), cont.etas.begin(), cont.etas.end());
    const auto areas = compute_areas(joined, {lambda, 0.0});
    auto& c = out[k];
    c.peak = peak;
    c.rewarm_steps = steps;
    c.base_steps = base.total_steps;
    c.loss = eval_curve(params, areas);
    c.etas = std::move(joined.etas);
    c.s2 = areas.s2;
    c.final_loss = c.loss.back();
    c.peak_loss = *std::max_element(c.loss.begin() + base.total_steps, c.loss.end());
  });
  return out;
}

// ---------------------------------------------------------------------------
// reduction to the endpoint power law

struct UniformRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct ParamBox {
  UniformRange L0{1.0, 3.0};
  UniformRange A{0.3, 0.5};
  UniformRange C{0.2, 0.6};
  /// Positive exponent; see the decisions log for the sign.
  UniformRange alpha{0.4, 0.6};
};

enum class ReductionFamily { constant, cosine, wsd };

inline std::string_view to_string(ReductionFamily f) {
  switch (f) {
    case ReductionFamily::constant: return "constant";
    case ReductionFamily::cosine: return "cosine";
    case ReductionFamily::wsd: return "wsd";
  }
  return "?";
}

inline ReductionFamily parse_reduction_family(std::string_view s) {
  if (s == "constant") return ReductionFamily::constant;
  if (s == "cosine") return ReductionFamily::cosine;
  if (s == "wsd") return ReductionFamily::wsd;
  throw InputError("unknown schedule family '" + std::string(s) + "'", "families");
}

inline std::vector<std::int64_t> default_reduction_totals() {
  std::vector<std::int64_t> t;
  for (std::int64_t s = 5000; s <= 60000; s += 5000) t.push_back(s);
  return t;
}

struct ReductionOptions {
  ParamBox box;
  std::vector<ReductionFamily> families{ReductionFamily::cosine, ReductionFamily::wsd};
  std::vector<std::int64_t> totals = default_reduction_totals();
  double eta_max = 2e-4;
  std::int64_t warmup = 500;
  double lambda = 0.999;
  /// Annealing fraction of the WSD family (cosine-shaped decay to 0).
  double wsd_ratio = 0.1;
  double delta = 1e-3;
};

struct ReductionStats {
  double mean_r2 = 0.0;
  /// Population standard deviation.
  double std_r2 = 0.0;
  double mean_huber = 0.0;
};

struct ReductionRecord {
  LawParams params;
  /// Per family, in options order.
  std::vector<double> r2;
  std::vector<double> huber;
};

struct ReductionReport {
  std::size_t n_tuples = 0;
  std::uint64_t seed = 0;
  std::map<std::string, ReductionStats> per_lrs;
  std::vector<ReductionRecord> records;
  ReductionOptions options;
};

inline ScheduleSpec reduction_schedule(ReductionFamily f, std::int64_t total, const ReductionOptions& o) {
  switch (f) {
    case ReductionFamily::constant: return constant_schedule(total, o.eta_max, o.warmup);
    case ReductionFamily::cosine: return cosine_schedule(total, o.eta_max, 0.0, o.warmup);
    case ReductionFamily::wsd: return wsd_schedule(total, o.eta_max, 0.0, o.wsd_ratio, AnnealFn::cosine, o.warmup);
  }
  throw InputError("unknown family", "families");
}

/// Draws `n` tuples in the order L0, A, C, alpha per tuple.
inline std::vector<LawParams> sample_params(std::size_t n, std::uint64_t seed, const ParamBox& box = {}) {
  Rng rng(seed);
  std::vector<LawParams> out(n);
  for (auto& p : out) {
    p.L0 = rng.uniform(box.L0.lo, box.L0.hi);
    p.A = rng.uniform(box.A.lo, box.A.hi);
    p.C = rng.uniform(box.C.lo, box.C.hi);
    p.alpha = rng.uniform(box.alpha.lo, box.alpha.hi);
  }
  return out;
}

/// Fits the endpoint power law to final predicted losses of each tuple and
/// family. Tuples are taken as given (C = 0 is allowed).
inline ReductionReport reduction_from_tuples(std::span<const LawParams> tuples, const ReductionOptions& o) {
  detail::require_nonempty(tuples.size(), "n");
  detail::require_nonempty(o.families.size(), "families");
  if (o.totals.size() < 3) throw InputError("at least three totals required", "totals");
  for (std::size_t i = 1; i < o.totals.size(); ++i)
    if (o.totals[i] <= o.totals[i - 1]) throw InputError("totals must be increasing", "totals");

  // final (S1, S2) per family and total, shared by all tuples
  const AreaConfig area{o.lambda, 0.0};
  std::vector<std::vector<std::pair<double, double>>> finals(o.families.size());
  for (std::size_t f = 0; f < o.families.size(); ++f) {
    finals[f].resize(o.totals.size());
    detail::parallel_for(o.totals.size(), [&](std::size_t t) {
      const auto a = compute_areas(materialize(reduction_schedule(o.families[f], o.totals[t], o)), area);
      finals[f][t] = {a.s1.back(), a.s2.back()};
    });
  }

  ReductionReport rep;
  rep.n_tuples = tuples.size();
  rep.options = o;
  rep.records.resize(tuples.size());
  detail::parallel_for(tuples.size(), [&](std::size_t k) {
    const auto& p = tuples[k];
    auto& rec = rep.records[k];
    rec.params = p;
    for (std::size_t f = 0; f < o.families.size(); ++f) {
      std::vector<std::pair<double, double>> endpoints;
      for (std::size_t t = 0; t < o.totals.size(); ++t) {
        const auto [s1, s2] = finals[f][t];
        endpoints.emplace_back(static_cast<double>(o.totals[t]), p.L0 + p.A * std::pow(s1, -p.alpha) - p.C * s2);
      }
      const auto fit = fit_chinchilla(endpoints, o.delta);
      rec.r2.push_back(fit.r_squared);
      rec.huber.push_back(fit.huber);
    }
  });

  for (std::size_t f = 0; f < o.families.size(); ++f) {
    const double n = static_cast<double>(tuples.size());
    double sum = 0.0, hub = 0.0;
    for (const auto& r : rep.records) {
      sum += r.r2[f];
      hub += r.huber[f];
    }
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& r : rep.records) var += (r.r2[f] - mean) * (r.r2[f] - mean);
    rep.per_lrs[std::string(to_string(o.families[f]))] = {mean, std::sqrt(var / n), hub / n};
  }
  return rep;
}

inline ReductionReport reduction_experiment(std::size_t n, std::uint64_t seed, const ReductionOptions& o = {}) {
  if (n < 1) throw InputError("must be >= 1", "n");
  const auto tuples = sample_params(n, seed, o.box);
  auto rep = reduction_from_tuples(tuples, o);
  rep.seed = seed;
  return rep;
}

// ---------------------------------------------------------------------------
// fitting cost

struct CostRow {
  std::string method;
  std::string lrs;
  /// In units of the interval K.
  double total_steps = 0.0;
  double percent = 0.0;
};

/// Steps needed to fit the endpoint law from P points spaced K apart
/// (cosine: one run per point; WSD: one shared stable run plus an annealed
/// branch per point), against a single run for this law. Totals are in
/// units of K; `ours_steps` defaults to P / 2.
inline std::vector<CostRow> cost_table(std::int64_t interval_points, std::span<const double> wsd_ratios,
                                       std::optional<double> ours_steps = std::nullopt) {
  if (interval_points < 1) throw InputError("must be >= 1", "points");
  const double p = static_cast<double>(interval_points);
  const double cosine = p * (p + 1.0) / 2.0;
  std::vector<CostRow> rows;
  rows.push_back({"Chinchilla", "cosine", cosine, 100.0});
  for (double r : wsd_ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw InputError("ratios must be in (0, 1]", "ratios");
    const double steps = p + (cosine - p) * r;
    rows.push_back({"Chinchilla", "wsd(" + detail::format_double(r) + ")", steps, 100.0 * steps / cosine});
  }
  const double ours = ours_steps.value_or(p / 2.0);
  if (!(ours > 0.0)) throw InputError("must be positive", "ours_steps");
  rows.push_back({"Ours", "any", ours, 100.0 * ours / cosine});
  return rows;
}

/// One decimal, two below 1%.
inline std::string format_percent(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, pct < 1.0 ? "%.2f%%" : "%.1f%%", pct);
  return buf;
}

// ---------------------------------------------------------------------------
// export

inline nlohmann::json to_json(const SweepResult& r) {
  nlohmann::json j{{"kind", r.kind},
                   {"axis", r.axis},
                   {"final_losses", r.final_losses},
                   {"argmin_index", r.argmin_index},
                   {"argmin", r.axis.at(r.argmin_index)}};
  auto& groups = j["group_argmins"] = nlohmann::json::array();
  for (const auto& g : r.group_argmins) groups.push_back({{"key", g.key}, {"index", g.index}, {"cell", r.axis[g.index]}});
  if (r.full_curves) j["full_curves"] = *r.full_curves;
  return j;
}

/// Tidy CSV: one row per cell with the axis fields, final_loss and whether
/// the cell is the global argmin.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  std::vector<std::string> cols;
  for (const auto& [k, v] : r.axis.front().items()) cols.push_back(k);
  for (const auto& c : cols) os << c << ',';
  os << "final_loss,is_argmin\n";
  for (std::size_t i = 0; i < r.axis.size(); ++i) {
    for (const auto& c : cols) {
      const auto& v = r.axis[i].at(c);
      if (v.is_string()) os << v.get<std::string>();
      else if (v.is_number_float()) os << detail::format_double(v.get<double>());
      else os << v.dump();
      os << ',';
    }
    os << detail::format_double(r.final_losses[i]) << ',' << (i == r.argmin_index ? 1 : 0) << '\n';
  }
}

inline nlohmann::json to_json(const CrossoverResult& r) {
  nlohmann::json j{{"constant", to_json(r.constant)},
                   {"cosine", to_json(r.cosine)},
                   {"s1_star", r.s1_star},
                   {"s1_star_steps", r.s1_star_steps}};
  j["crossover_total"] = r.crossover_total ? nlohmann::json(*r.crossover_total) : nlohmann::json(nullptr);
  return j;
}

inline void write_crossover_csv(std::ostream& os, const CrossoverResult& r) {
  os << "total_steps,constant_final,cosine_final\n";
  for (std::size_t i = 0; i < r.constant.axis.size(); ++i)
    os << r.constant.axis[i].at("total_steps").dump() << ',' << detail::format_double(r.constant.final_losses[i])
       << ',' << detail::format_double(r.cosine.final_losses[i]) << '\n';
}

inline nlohmann::json to_json(const std::vector<CptCurve>& curves, bool include_series = true) {
  auto j = nlohmann::json::array();
  for (const auto& c : curves) {
    nlohmann::json o{{"peak", c.peak},
                     {"rewarm_steps", c.rewarm_steps},
                     {"base_steps", c.base_steps},
                     {"final_loss", c.final_loss},
                     {"peak_loss", c.peak_loss}};
    if (include_series) {
      o["lr"] = c.etas;
      o["s2"] = c.s2;
      o["loss"] = c.loss;
    }
    j.push_back(std::move(o));
  }
  return j;
}

/// Long format: one row per (curve, step).
inline void write_cpt_csv(std::ostream& os, const std::vector<CptCurve>& curves) {
  os << "peak,rewarm_steps,step,lr,s2,loss\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.loss.size(); ++i)
      os << detail::format_double(c.peak) << ',' << c.rewarm_steps << ',' << (i + 1) << ','
         << detail::format_double(c.etas[i]) << ',' << detail::format_double(c.s2[i]) << ','
         << detail::format_double(c.loss[i]) << '\n';
}

inline nlohmann::json to_json(const ReductionReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [k, s] : r.per_lrs)
    per[k] = {{"mean_r2", s.mean_r2}, {"std_r2", s.std_r2}, {"mean_huber", s.mean_huber}};
  std::vector<std::string> fams;
  for (auto f : r.options.families) fams.emplace_back(to_string(f));
  return {{"n_tuples", r.n_tuples},
          {"seed", r.seed},
          {"per_lrs", per},
          {"families", fams},
          {"totals", r.options.totals},
          {"lambda", r.options.lambda},
          {"wsd_ratio", r.options.wsd_ratio},
          {"warmup_steps", r.options.warmup},
          {"eta_max", r.options.eta_max}};
}

inline void write_reduction_csv(std::ostream& os, const ReductionReport& r) {
  os << "tuple,L0,A,C,alpha,family,r2,huber\n";
  for (std::size_t k = 0; k < r.records.size(); ++k) {
    const auto& rec = r.records[k];
    for (std::size_t f = 0; f < r.options.families.size(); ++f)
      os << k << ',' << detail::format_double(rec.params.L0) << ',' << detail::format_double(rec.params.A) << ','
         << detail::format_double(rec.params.C) << ',' << detail::format_double(rec.params.alpha) << ','
         << to_string(r.options.families[f]) << ',' << detail::format_double(rec.r2[f]) << ','
         << detail::format_double(rec.huber[f]) << '\n';
  }
}

inline nlohmann::json to_json(const std::vector<CostRow>& rows) {
  auto j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"method", r.method},
                 {"lrs", r.lrs},
                 {"total_steps_k", r.total_steps},
                 {"percent", r.percent},
                 {"percent_text", format_percent(r.percent)}});
  return j;
}

}  // namespace anneal_law
