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

// JSON API over the library. ApiSession::handle is a pure function of the
// request and the fits loaded at startup; the HTTP binding lives in
// service_http.hpp.
//
//   POST /v1/predict              {fit_id | params, schedule_spec, lambda?, n?, downsample?, max_points?}
//   POST /v1/fit                  {curves: [{samples, schedule_spec, label?, n?}], config?}
//   POST /v1/sweep/cosine         {fit_id | params, total, cycle_factors?, min_lr_fracs?, ...}
//   POST /v1/sweep/wsd            {fit_id | params, totals, ratios?, anneal_fn?, ...}
//   POST /v1/sweep/anneal-fn      {fit_id | params, total, ratios?, fns?, ...}
//   POST /v1/sweep/cpt            {fit_id | params, base_steps | base_spec, rewarm_peaks, rewarm_steps, continuation, ...}
//   GET  /v1/fits
//   GET  /healthz

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anneal_law/analysis.hpp"
#include "anneal_law/error.hpp"
#include "anneal_law/fit.hpp"
#include "anneal_law/law.hpp"
#include "anneal_law/manifest.hpp"
#include "anneal_law/schedule.hpp"

namespace anneal_law {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceLimits {
  /// Samples accepted by /v1/fit; larger fits belong on the CLI.
  std::size_t max_fit_samples = 50'000;
  /// Default response length cap.
  std::size_t max_points = 5'000;
  std::int64_t max_total_steps = 2'000'000;
  std::size_t max_sweep_cells = 512;
};

struct LoadedFitEntry {
  std::string id;
  LawParams params;
  double lambda = 0.999;
  std::string source;
};

/// Indices round(k * (n - 1) / (m - 1)) for k = 0..m-1; all indices when
/// n <= m. First and last are always kept.
inline std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t m) {
  std::vector<std::size_t> idx;
  if (n <= m || m < 2) {
    idx.resize(n <= m ? n : std::min<std::size_t>(n, 1));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
  idx.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    idx[k] = static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(n - 1) / static_cast<double>(m - 1)));
  return idx;
}

class ApiSession {
 public:
  explicit ApiSession(double default_lambda = 0.999, ServiceLimits limits = {})
      : default_lambda_(default_lambda), limits_(limits) {
    AreaConfig{default_lambda, 0.0}.validate();
  }

  /// Registers a fit before serving starts. Ids must be unique; an empty id
  /// becomes "fit-<k>".
  std::string add_fit(const LawParams& params, std::string id = {}, std::optional<double> lambda = std::nullopt,
                             std::string source = {}) {
    params.validate();
    if (id.empty()) id = "fit-" + std::to_string(fits_.size() + 1);
    if (fits_.count(id)) throw InputError("duplicate fit id '" + id + "'", "fit_id");
    const double lam = lambda.value_or(default_lambda_);
    AreaConfig{lam, 0.0}.validate();
    order_.push_back(id);
    fits_[id] = {id, params, lam, std::move(source)};
    return id;
  }

  const ServiceLimits& limits() const noexcept { return limits_; }
  double default_lambda() const noexcept { return default_lambda_; }

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body) const {
    try {
      if (path == "/healthz") {
        if (method != "GET") return method_not_allowed();
        return {200, {{"status", "ok"}, {"version", std::string(kVersion)}}};
      }
      if (path == "/v1/fits") {
        if (method != "GET") return method_not_allowed();
        return {200, fits_json()};
      }
      const bool known = path == "/v1/predict" || path == "/v1/fit" || path == "/v1/sweep/cosine" ||
                         path == "/v1/sweep/wsd" || path == "/v1/sweep/anneal-fn" || path == "/v1/sweep/cpt";
      if (!known) return {404, {{"error", "no such endpoint: " + std::string(path)}}};
      if (method != "POST") return method_not_allowed();
      auto req = nlohmann::json::parse(body, nullptr, false);
      if (req.is_discarded()) return {400, {{"error", "request body is not valid JSON"}, {"field", ""}}};
      if (!req.is_object()) return {400, {{"error", "request body must be a JSON object"}, {"field", ""}}};
      if (path == "/v1/predict") return predict_endpoint(req);
      if (path == "/v1/fit") return fit_endpoint(req);
      if (path == "/v1/sweep/cosine") return sweep_cosine_endpoint(req);
      if (path == "/v1/sweep/wsd") return sweep_wsd_endpoint(req);
      if (path == "/v1/sweep/anneal-fn") return sweep_anneal_fn_endpoint(req);
      return sweep_cpt_endpoint(req);
    } catch (const InputError& e) {
      return {400, {{"error", e.what()}, {"field", e.field()}}};
    } catch (const DomainError& e) {
      return {422, {{"error", e.what()}}};
    } catch (const TooLargeError& e) {
      return {413, {{"error", e.what()}}};
    } catch (const FitConvergenceError& e) {
      return {422, {{"error", e.what()}, {"report", to_json(e.best_so_far())}}};
    } catch (const nlohmann::json::exception& e) {
      return {400, {{"error", e.what()}, {"field", ""}}};
    } catch (const std::exception& e) {
      return {500, {{"error", e.what()}}};
    }
  }

 private:
  static ApiResponse method_not_allowed() { return {405, {{"error", "method not allowed"}}}; }

  nlohmann::json fits_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& id : order_) {
      const auto& f = fits_.at(id);
      arr.push_back({{"id", f.id}, {"params", to_json(f.params)}, {"lambda", f.lambda}, {"source", f.source}});
    }
    return {{"fits", arr}};
  }

  static void allow(const nlohmann::json& req, std::initializer_list<std::string_view> keys) {
    detail::reject_unknown_fields(req, keys, "");
  }

  /// Parameters and lambda from {fit_id} or {params}, with an optional
  /// lambda override.
  std::pair<LawParams, double> resolve(const nlohmann::json& req) const {
    double lambda = default_lambda_;
    LawParams params;
    if (req.contains("fit_id")) {
      if (!req["fit_id"].is_string()) throw InputError("expected a string", "fit_id");
      const auto id = req["fit_id"].get<std::string>();
      auto it = fits_.find(id);
      if (it == fits_.end()) throw InputError("unknown fit id '" + id + "'", "fit_id");
      params = it->second.params;
      lambda = it->second.lambda;
    } else if (req.contains("params")) {
      params = law_params_from_json(req["params"]);
    } else {
      throw InputError("either fit_id or params is required", "params");
    }
    if (req.contains("lambda")) lambda = detail::json_real(req["lambda"], "lambda");
    AreaConfig{lambda, 0.0}.validate();
    return {params, lambda};
  }

  std::size_t points_cap(const nlohmann::json& req) const {
    bool downsample = true;
    if (req.contains("downsample")) {
      if (!req["downsample"].is_boolean()) throw InputError("expected a boolean", "downsample");
      downsample = req["downsample"].get<bool>();
    }
    if (!downsample) return static_cast<std::size_t>(-1);
    if (req.contains("max_points")) {
      const auto m = detail::json_int(req["max_points"], "max_points");
      if (m < 2) throw InputError("must be >= 2", "max_points");
      return static_cast<std::size_t>(m);
    }
    return limits_.max_points;
  }

  void check_steps(std::int64_t total, const char* field) const {
    if (total > limits_.max_total_steps)
      throw TooLargeError(std::string(field) + " of " + std::to_string(total) + " exceeds the service limit of " +
                          std::to_string(limits_.max_total_steps) + " steps; use the CLI");
  }

  void check_cells(std::size_t cells) const {
    if (cells > limits_.max_sweep_cells)
      throw TooLargeError("sweep of " + std::to_string(cells) + " cells exceeds the service limit of " +
                          std::to_string(limits_.max_sweep_cells) + "; use the CLI");
  }

  static ScheduleSpec spec_field(const nlohmann::json& req, const char* key) {
    if (!req.contains(key)) throw InputError("required", key);
    try {
      return schedule_from_json(req[key]);
    } catch (const InputError& e) {
      const auto field = e.field().empty() ? std::string(key) : std::string(key) + "." + e.field();
      throw InputError(std::string(e.what()).substr(e.field().empty() ? 0 : e.field().size() + 2), field);
    }
  }

  static std::vector<double> reals(const nlohmann::json& req, const char* key, std::vector<double> def) {
    if (!req.contains(key)) return def;
    if (!req[key].is_array()) throw InputError("expected an array", key);
    std::vector<double> out;
    for (std::size_t i = 0; i < req[key].size(); ++i)
      out.push_back(detail::json_real(req[key][i], std::string(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  static std::vector<std::int64_t> ints(const nlohmann::json& req, const char* key,
                                        std::optional<std::vector<std::int64_t>> def = std::nullopt) {
    if (!req.contains(key)) {
      if (def) return *def;
      throw InputError("required", key);
    }
    if (!req[key].is_array()) throw InputError("expected an array", key);
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < req[key].size(); ++i)
      out.push_back(detail::json_int(req[key][i], std::string(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  SweepContext context(const nlohmann::json& req, double lambda) const {
    SweepContext ctx;
    ctx.lambda = lambda;
    if (req.contains("eta_max")) ctx.eta_max = detail::json_real(req["eta_max"], "eta_max");
    if (req.contains("warmup_steps")) ctx.warmup = detail::json_int(req["warmup_steps"], "warmup_steps");
    if (!(ctx.eta_max > 0.0)) throw InputError("must be positive", "eta_max");
    if (ctx.warmup < 0) throw InputError("must be >= 0", "warmup_steps");
    return ctx;
  }

  ApiResponse predict_endpoint(const nlohmann::json& req) const {
    allow(req, {"fit_id", "params", "schedule_spec", "lambda", "n", "downsample", "max_points"});
    const auto [params, lambda] = resolve(req);
    const auto spec = spec_field(req, "schedule_spec");
    check_steps(spec.total_steps, "total_steps");
    std::optional<double> n;
    if (req.contains("n")) n = detail::json_real(req["n"], "n");
    const auto cap = points_cap(req);
    const auto p = predict(params, spec, {lambda, 0.0}, n);
    const auto idx = downsample_indices(p.loss.size(), cap);
    nlohmann::json steps = nlohmann::json::array(), lr = nlohmann::json::array(), s1 = nlohmann::json::array(),
                   s2 = nlohmann::json::array(), loss = nlohmann::json::array(), s1_term = nlohmann::json::array(),
                   s2_term = nlohmann::json::array();
    for (auto i : idx) {
      steps.push_back(i + 1);
      lr.push_back(p.series.etas[i]);
      s1.push_back(p.areas.s1[i]);
      s2.push_back(p.areas.s2[i]);
      loss.push_back(p.loss[i]);
      s1_term.push_back(params.A * std::pow(p.areas.s1[i], -params.alpha));
      s2_term.push_back(-params.C * detail::s2_power(p.areas.s2[i], params.zeta));
    }
    return {200,
            {{"steps", steps},
             {"lr", lr},
             {"s1", s1},
             {"s2", s2},
             {"loss", loss},
             {"s1_term", s1_term},
             {"s2_term", s2_term},
             {"L0", params.L0},
             {"final_loss", p.loss.back()},
             {"total_steps", spec.total_steps},
             {"lambda", lambda}}};
  }

  static std::vector<Sample> samples_field(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array()) throw InputError("expected an array", field);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto f = field + "[" + std::to_string(i) + "]";
      const auto& s = j[i];
      if (s.is_array()) {
        auto [a, b] = detail::json_pair(s, f);
        out.push_back({detail::json_int(a, f + ".step"), detail::json_real(b, f + ".loss")});
      } else if (s.is_object()) {
        detail::reject_unknown_fields(s, {"step", "loss"}, f);
        if (!s.contains("step") || !s.contains("loss")) throw InputError("step and loss required", f);
        out.push_back({detail::json_int(s["step"], f + ".step"), detail::json_real(s["loss"], f + ".loss")});
      } else {
        throw InputError("expected [step, loss] or {step, loss}", f);
      }
    }
    return out;
  }

  ApiResponse fit_endpoint(const nlohmann::json& req) const {
    allow(req, {"curves", "config"});
    if (!req.contains("curves") || !req["curves"].is_array()) throw InputError("required array", "curves");
    std::size_t total = 0;
    for (const auto& c : req["curves"])
      if (c.is_object() && c.contains("samples") && c["samples"].is_array()) total += c["samples"].size();
    if (total > limits_.max_fit_samples)
      throw TooLargeError(std::to_string(total) + " samples exceed the service limit of " +
                          std::to_string(limits_.max_fit_samples) + "; run `anneal_law fit` from the CLI instead");
    std::vector<LossCurve> curves;
    for (std::size_t i = 0; i < req["curves"].size(); ++i) {
      const auto& c = req["curves"][i];
      const auto f = "curves[" + std::to_string(i) + "]";
      detail::reject_unknown_fields(c, {"samples", "schedule_spec", "label", "n"}, f);
      LossCurve curve;
      if (!c.contains("samples")) throw InputError("required", f + ".samples");
      curve.samples = samples_field(c["samples"], f + ".samples");
      curve.schedule = spec_field(c, "schedule_spec");
      check_steps(curve.schedule.total_steps, "total_steps");
      if (c.contains("label")) {
        if (!c["label"].is_string()) throw InputError("expected a string", f + ".label");
        curve.label = c["label"].get<std::string>();
      }
      if (c.contains("n")) curve.n = detail::json_real(c["n"], f + ".n");
      curves.push_back(std::move(curve));
    }
    FitConfig config;
    config.lambda = default_lambda_;
    if (req.contains("config")) {
      auto cj = req["config"];
      if (cj.is_object() && !cj.contains("lambda")) cj["lambda"] = default_lambda_;
      config = fit_config_from_json(cj);
    }
    return {200, to_json(fit(curves, config))};
  }

  ApiResponse sweep_cosine_endpoint(const nlohmann::json& req) const {
    allow(req, {"fit_id", "params", "lambda", "eta_max", "warmup_steps", "total", "cycle_factors", "min_lr_fracs"});
    const auto [params, lambda] = resolve(req);
    if (!req.contains("total")) throw InputError("required", "total");
    const auto total = detail::json_int(req["total"], "total");
    check_steps(total, "total");
    const auto factors = reals(req, "cycle_factors", default_cycle_factors());
    const auto fracs = reals(req, "min_lr_fracs", default_min_lr_fracs());
    check_cells(factors.size() * fracs.size());
    return {200, to_json(sweep_cosine(params, total, factors, fracs, context(req, lambda)))};
  }

  ApiResponse sweep_wsd_endpoint(const nlohmann::json& req) const {
    allow(req, {"fit_id", "params", "lambda", "eta_max", "warmup_steps", "totals", "ratios", "anneal_fn", "eta_min"});
    const auto [params, lambda] = resolve(req);
    const auto totals = ints(req, "totals");
    for (auto t : totals) check_steps(t, "totals");
    const auto ratios = reals(req, "ratios", default_wsd_ratios());
    check_cells(totals.size() * ratios.size());
    AnnealFn fn = AnnealFn::cosine;
    if (req.contains("anneal_fn")) {
      if (!req["anneal_fn"].is_string()) throw InputError("expected a string", "anneal_fn");
      fn = parse_anneal_fn(req["anneal_fn"].get<std::string>());
    }
    const double eta_min = req.contains("eta_min") ? detail::json_real(req["eta_min"], "eta_min") : 0.0;
    return {200, to_json(sweep_wsd(params, totals, ratios, fn, context(req, lambda), eta_min))};
  }

  ApiResponse sweep_anneal_fn_endpoint(const nlohmann::json& req) const {
    allow(req, {"fit_id", "params", "lambda", "eta_max", "warmup_steps", "total", "ratios", "fns", "eta_min"});
    const auto [params, lambda] = resolve(req);
    if (!req.contains("total")) throw InputError("required", "total");
    const auto total = detail::json_int(req["total"], "total");
    check_steps(total, "total");
    const auto ratios = reals(req, "ratios", {0.1, 0.2, 0.3, 0.5});
    std::vector<AnnealFn> fns = default_anneal_fns();
    if (req.contains("fns")) {
      if (!req["fns"].is_array()) throw InputError("expected an array", "fns");
      fns.clear();
      for (std::size_t i = 0; i < req["fns"].size(); ++i) {
        const auto& f = req["fns"][i];
        if (!f.is_string()) throw InputError("expected a string", "fns[" + std::to_string(i) + "]");
        fns.push_back(parse_anneal_fn(f.get<std::string>()));
      }
    }
    check_cells(ratios.size() * fns.size());
    const double eta_min = req.contains("eta_min") ? detail::json_real(req["eta_min"], "eta_min") : 0.0;
    return {200, to_json(compare_anneal_fns(params, total, ratios, fns, context(req, lambda), eta_min))};
  }

  ApiResponse sweep_cpt_endpoint(const nlohmann::json& req) const {
    allow(req, {"fit_id", "params", "lambda", "eta_max", "warmup_steps", "base_steps", "base_spec", "rewarm_peaks",
                "rewarm_steps", "continuation", "downsample", "max_points"});
    const auto [params, lambda] = resolve(req);
    const auto ctx = context(req, lambda);
    ScheduleSpec base;
    if (req.contains("base_spec")) {
      base = spec_field(req, "base_spec");
    } else {
      if (!req.contains("base_steps")) throw InputError("base_steps or base_spec required", "base_steps");
      base = default_cpt_base(detail::json_int(req["base_steps"], "base_steps"), ctx);
    }
    const auto continuation = spec_field(req, "continuation");
    check_steps(base.total_steps + continuation.total_steps, "total_steps");
    const auto peaks = reals(req, "rewarm_peaks", {});
    const auto steps = ints(req, "rewarm_steps");
    check_cells(peaks.size() * steps.size());
    const auto cap = points_cap(req);
    const auto curves = cpt_predict(params, base, peaks, steps, continuation, lambda);
    auto out = nlohmann::json::array();
    for (const auto& c : curves) {
      const auto idx = downsample_indices(c.loss.size(), cap);
      nlohmann::json st = nlohmann::json::array(), lr = nlohmann::json::array(), s2 = nlohmann::json::array(),
                     loss = nlohmann::json::array();
      for (auto i : idx) {
        st.push_back(i + 1);
        lr.push_back(c.etas[i]);
        s2.push_back(c.s2[i]);
        loss.push_back(c.loss[i]);
      }
      out.push_back({{"peak", c.peak},
                     {"rewarm_steps", c.rewarm_steps},
                     {"base_steps", c.base_steps},
                     {"final_loss", c.final_loss},
                     {"peak_loss", c.peak_loss},
                     {"steps", st},
                     {"lr", lr},
                     {"s2", s2},
                     {"loss", loss}});
    }
    return {200, {{"kind", "cpt"}, {"curves", out}}};
  }

  double default_lambda_;
  ServiceLimits limits_;
  std::map<std::string, LoadedFitEntry> fits_;
  std::vector<std::string> order_;
};

}  // namespace anneal_law
