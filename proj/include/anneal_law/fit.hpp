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

// Parameter estimation for the annealing law.
//
// Minimizes  sum_curves sum_samples Huber_delta(log L_hat(i) - log L(i))
// over log-parameters with multi-start L-BFGS. Working in log space keeps
// every fitted constant strictly positive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "anneal_law/area.hpp"
#include "anneal_law/detail/parallel.hpp"
#include "anneal_law/error.hpp"
#include "anneal_law/law.hpp"
#include "anneal_law/lbfgs.hpp"
#include "anneal_law/schedule.hpp"

namespace anneal_law {

struct Sample {
  std::int64_t step = 0;
  double loss = 0.0;

  bool operator==(const Sample&) const = default;
};

struct LossCurve {
  std::vector<Sample> samples;
  /// Non-embedding parameter count, for the model-size extension.
  std::optional<double> n;
  ScheduleSpec schedule;
  std::string label;

  void validate() const {
    const std::string where = label.empty() ? std::string("curve") : "curve '" + label + "'";
    schedule.validate();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const auto field = where + ".samples[" + std::to_string(i) + "]";
      if (s.step < 1 || s.step > schedule.total_steps) throw InputError("step outside the schedule", field);
      if (i > 0 && s.step <= samples[i - 1].step) throw InputError("steps must be strictly increasing", field);
      if (!std::isfinite(s.loss) || !(s.loss > 0.0)) throw InputError("loss must be finite and > 0", field);
    }
    if (n && !(*n > 0.0)) throw InputError("must be positive", where + ".n");
  }
};

enum class FitVariant { base, lr_weighted, zeta };

inline std::string_view to_string(FitVariant v) {
  switch (v) {
    case FitVariant::base: return "base";
    case FitVariant::lr_weighted: return "lr_weighted";
    case FitVariant::zeta: return "zeta";
  }
  return "?";
}

inline FitVariant parse_fit_variant(std::string_view s) {
  if (s == "base") return FitVariant::base;
  if (s == "lr_weighted" || s == "lr-weighted") return FitVariant::lr_weighted;
  if (s == "zeta") return FitVariant::zeta;
  throw InputError("unknown fit variant '" + std::string(s) + "'", "variant");
}

/// Cartesian product L0 {1.5, 2.5, 3.5} x A {0.3, 1.0} x C {0.2, 0.6} x alpha {0.4, 0.7}.
inline std::vector<LawParams> default_init_grid() {
  std::vector<LawParams> grid;
  for (double l0 : {1.5, 2.5, 3.5})
    for (double a : {0.3, 1.0})
      for (double c : {0.2, 0.6})
        for (double alpha : {0.4, 0.7}) grid.push_back({l0, a, c, alpha});
  return grid;
}

// Starting values for the model-size terms when a grid point omits them.
inline constexpr double kDefaultStartB = 400.0;
inline constexpr double kDefaultStartBeta = 0.3;
inline constexpr double kDefaultStartGamma = 0.1;

struct FitConfig {
  double delta = 1e-3;
  double lambda = 0.999;
  std::vector<LawParams> init_grid = default_init_grid();
  int max_iterations = 1000;
  bool fit_extension = false;
  FitVariant variant = FitVariant::base;
  /// LR-weight exponent for the lr_weighted variant (held fixed).
  double epsilon = 0.0;
  /// Keep every stride-th sample of each curve.
  std::int64_t stride = 1;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InputError("must be positive", "delta");
    AreaConfig{lambda, epsilon}.validate();
    if (init_grid.empty()) throw InputError("must not be empty", "init_grid");
    if (max_iterations < 1) throw InputError("must be >= 1", "max_iterations");
    if (stride < 1) throw InputError("must be >= 1", "stride");
    if (variant == FitVariant::lr_weighted && !(epsilon > 0.0))
      throw InputError("lr_weighted variant needs epsilon > 0", "epsilon");
    if (variant != FitVariant::lr_weighted && epsilon != 0.0)
      throw InputError("epsilon is only used by the lr_weighted variant", "epsilon");
  }

  AreaConfig area_config() const { return {lambda, variant == FitVariant::lr_weighted ? epsilon : 0.0}; }
};

struct CurveFitStats {
  std::string label;
  std::optional<double> r_squared;
  double mean_rel_error = 0.0;
};

struct FitReport {
  LawParams params;
  double objective = 0.0;
  std::optional<double> r_squared;
  double mean_rel_error = 0.0;
  std::vector<CurveFitStats> per_curve;
  int starts_tried = 0;
  bool converged = false;
  std::string status;
  int iterations = 0;
  /// Parameters the data carry no information about (e.g. C when S2 == 0
  /// everywhere); their values are the starting guess.
  std::vector<std::string> unconstrained;
  /// Some curve has zero loss variance.
  bool ill_conditioned = false;
  FitConfig config;
};

class FitConvergenceError : public Error {
 public:
  explicit FitConvergenceError(FitReport best)
      : Error("no start converged (best objective " + std::to_string(best.objective) + ", " + best.status + ")"),
        best_(std::move(best)) {}
  const FitReport& best_so_far() const noexcept { return best_; }
  int exit_code() const noexcept override { return 3; }

 private:
  FitReport best_;
};

// ---------------------------------------------------------------------------

inline double huber(double r, double delta) {
  const double a = std::fabs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

/// d huber / d r
inline double huber_slope(double r, double delta) { return std::clamp(r, -delta, delta); }

struct NonPositivePrediction {
  std::string label;
  std::int64_t step = 0;
  double prediction = 0.0;
};

struct ObjectiveValue {
  /// +infinity when some prediction is <= 0.
  double value = 0.0;
  std::optional<NonPositivePrediction> non_positive;
};

/// Prepared fitting problem: areas are computed once per curve; the
/// objective is evaluated on log-parameters
///   [log L0, log A, log C, log alpha, (log B, log beta, log gamma), (log zeta)].
class FitProblem {
 public:
  FitProblem(std::span<const LossCurve> curves, const FitConfig& config) : config_(config) {
    config.validate();
    if (curves.empty()) throw InputError("at least one curve required", "curves");
    extension_ = config.fit_extension;
    zeta_ = config.variant == FitVariant::zeta;
    const auto area_cfg = config.area_config();
    for (std::size_t c = 0; c < curves.size(); ++c) {
      const auto& curve = curves[c];
      curve.validate();
      if (extension_ && !curve.n) throw InputError("model size required for the extended fit", "curves[" + std::to_string(c) + "].n");
      const auto series = materialize(curve.schedule);
      const auto areas = compute_areas(series, area_cfg);
      Prepared p;
      p.label = curve.label.empty() ? "curve" + std::to_string(c) : curve.label;
      p.n = curve.n.value_or(1.0);
      p.log_n = std::log(p.n);
      for (std::size_t i = 0; i < curve.samples.size(); i += static_cast<std::size_t>(config.stride)) {
        const auto& s = curve.samples[i];
        const auto idx = static_cast<std::size_t>(s.step - 1);
        const double s2 = areas.s2[idx];
        if (zeta_ && s2 < 0.0) throw DomainError("zeta variant undefined for negative S2 (curve '" + p.label + "', step " + std::to_string(s.step) + ")");
        p.steps.push_back(s.step);
        p.log_s1.push_back(std::log(areas.s1[idx]));
        p.s2.push_back(s2);
        p.log_s2.push_back(s2 > 0.0 ? std::log(s2) : 0.0);
        p.observed.push_back(s.loss);
        p.log_observed.push_back(std::log(s.loss));
      }
      prepared_.push_back(std::move(p));
    }
  }

  std::size_t dimension() const noexcept { return 4 + (extension_ ? 3 : 0) + (zeta_ ? 1 : 0); }
  std::size_t sample_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : prepared_) n += p.steps.size();
    return n;
  }
  const FitConfig& config() const noexcept { return config_; }

  std::vector<double> to_theta(const LawParams& p) const {
    std::vector<double> t{std::log(p.L0), std::log(p.A), std::log(p.C), std::log(p.alpha)};
    if (extension_) {
      t.push_back(std::log(p.B.value_or(kDefaultStartB)));
      t.push_back(std::log(p.beta.value_or(kDefaultStartBeta)));
      t.push_back(std::log(p.gamma.value_or(kDefaultStartGamma)));
    }
    if (zeta_) t.push_back(std::log(p.zeta));
    return t;
  }

  LawParams from_theta(std::span<const double> t) const {
    LawParams p{std::exp(t[0]), std::exp(t[1]), std::exp(t[2]), std::exp(t[3])};
    std::size_t k = 4;
    if (extension_) {
      p.B = std::exp(t[k++]);
      p.beta = std::exp(t[k++]);
      p.gamma = std::exp(t[k++]);
    }
    if (zeta_) p.zeta = std::exp(t[k++]);
    return p;
  }

  /// Objective and its gradient with respect to theta. Returns +infinity
  /// (gradient unspecified) when a prediction is non-positive.
  double evaluate(std::span<const double> theta, std::span<double> grad,
                  NonPositivePrediction* offending = nullptr) const {
    const LawParams p = from_theta(theta);
    const double delta = config_.delta;
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t k_ext = 4;
    const std::size_t k_zeta = extension_ ? 7 : 4;
    double total = 0.0;
    for (const auto& c : prepared_) {
      const double size_term = extension_ ? *p.B * std::exp(-*p.beta * c.log_n) : 0.0;
      const double c_eff = extension_ ? p.C * std::exp(*p.gamma * c.log_n) : p.C;
      double g[8] = {};
      double sum = 0.0;
      for (std::size_t i = 0; i < c.steps.size(); ++i) {
        const double t1 = p.A * std::exp(-p.alpha * c.log_s1[i]);
        const double s2_term = zeta_ ? (c.s2[i] > 0.0 ? std::exp(p.zeta * c.log_s2[i]) : 0.0) : c.s2[i];
        const double anneal = c_eff * s2_term;
        const double pred = p.L0 + t1 + size_term - anneal;
        if (!(pred > 0.0)) {
          if (offending) *offending = {c.label, c.steps[i], pred};
          return std::numeric_limits<double>::infinity();
        }
        const double r = std::log(pred) - c.log_observed[i];
        sum += huber(r, delta);
        const double w = huber_slope(r, delta) / pred;
        g[0] += w * p.L0;
        g[1] += w * t1;
        g[2] -= w * anneal;
        g[3] -= w * p.alpha * c.log_s1[i] * t1;
        if (extension_) {
          g[4] += w * size_term;
          g[5] -= w * *p.beta * c.log_n * size_term;
          g[6] -= w * anneal * *p.gamma * c.log_n;
        }
        if (zeta_ && c.s2[i] > 0.0) g[k_zeta] -= w * anneal * p.zeta * c.log_s2[i];
      }
      total += sum;
      for (std::size_t k = 0; k < 4; ++k) grad[k] += g[k];
      if (extension_)
        for (std::size_t k = k_ext; k < k_ext + 3; ++k) grad[k] += g[k];
      if (zeta_) grad[k_zeta] += g[k_zeta];
    }
    return total;
  }

  double evaluate(const LawParams& p, NonPositivePrediction* offending = nullptr) const {
    const auto theta = to_theta(p);
    std::vector<double> grad(theta.size());
    return evaluate(theta, grad, offending);
  }

  /// Parameters the objective does not depend on.
  std::vector<std::string> unconstrained() const {
    bool any_s2 = false;
    for (const auto& c : prepared_)
      for (double v : c.s2) any_s2 = any_s2 || v != 0.0;
    std::vector<std::string> out;
    if (!any_s2) {
      out.push_back("C");
      if (extension_) out.push_back("gamma");
      if (zeta_) out.push_back("zeta");
    }
    return out;
  }

  bool ill_conditioned() const {
    for (const auto& c : prepared_) {
      if (c.observed.size() < 2) continue;
      if (std::all_of(c.observed.begin(), c.observed.end(), [&](double v) { return v == c.observed.front(); }))
        return true;
    }
    return false;
  }

  struct Prepared {
    std::string label;
    double n = 1.0;
    double log_n = 0.0;
    std::vector<std::int64_t> steps;
    std::vector<double> log_s1, s2, log_s2, observed, log_observed;
  };
  const std::vector<Prepared>& prepared() const noexcept { return prepared_; }

  /// Law predictions at the prepared samples of curve `c`.
  std::vector<double> predict(const LawParams& p, std::size_t c) const {
    const auto& cur = prepared_[c];
    std::vector<double> out(cur.steps.size());
    const double size_term = extension_ ? *p.B * std::pow(cur.n, -*p.beta) : 0.0;
    const double c_eff = extension_ ? p.C * std::pow(cur.n, *p.gamma) : p.C;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double s2_term = zeta_ ? (cur.s2[i] > 0.0 ? std::pow(cur.s2[i], p.zeta) : 0.0) : cur.s2[i];
      out[i] = p.L0 + p.A * std::exp(-p.alpha * cur.log_s1[i]) + size_term - c_eff * s2_term;
    }
    return out;
  }

 private:
  FitConfig config_;
  bool extension_ = false;
  bool zeta_ = false;
  std::vector<Prepared> prepared_;
};

/// Summed Huber objective of `params` on `curves`. A non-positive
/// prediction yields +infinity and names the offending step.
inline ObjectiveValue objective(const LawParams& params, std::span<const LossCurve> curves, const FitConfig& config) {
  FitProblem problem(curves, config);
  ObjectiveValue out;
  NonPositivePrediction bad;
  out.value = problem.evaluate(params, &bad);
  if (!std::isfinite(out.value)) out.non_positive = bad;
  return out;
}

// ---------------------------------------------------------------------------
// metrics

struct Metrics {
  /// Unset when the observed losses have zero variance.
  std::optional<double> r_squared;
  double mean_rel_error = 0.0;
};

inline Metrics metrics(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size() || observed.empty())
    throw InputError("predicted and observed must be aligned and non-empty", "observed");
  double mean = 0.0;
  for (double v : observed) mean += v;
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0, ss_tot = 0.0, rel = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = predicted[i] - observed[i];
    ss_res += e * e;
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
    rel += std::fabs(e) / observed[i];
  }
  Metrics m;
  m.mean_rel_error = rel / static_cast<double>(observed.size());
  if (ss_tot > 0.0) m.r_squared = 1.0 - ss_res / ss_tot;
  return m;
}

/// Metrics of a full per-step prediction (index = step - 1) against the
/// observed samples.
inline Metrics metrics(std::span<const double> predicted_curve, const LossCurve& observed) {
  std::vector<double> pred, obs;
  for (const auto& s : observed.samples) {
    if (s.step < 1 || static_cast<std::size_t>(s.step) > predicted_curve.size())
      throw InputError("observed step " + std::to_string(s.step) + " outside the predicted curve", "observed");
    pred.push_back(predicted_curve[static_cast<std::size_t>(s.step - 1)]);
    obs.push_back(s.loss);
  }
  return metrics(pred, obs);
}

// ---------------------------------------------------------------------------
// fitting

inline constexpr std::size_t kMinFitSamples = 50;

namespace detail {

inline LbfgsOptions fit_lbfgs_options(int max_iterations) {
  LbfgsOptions o;
  o.max_iterations = max_iterations;
  o.gradient_tolerance = 1e-11;
  o.function_tolerance = 1e-12;
  return o;
}

struct StartOutcome {
  LbfgsResult result;
  bool ran = false;
};

template <typename Problem>
std::vector<StartOutcome> run_starts(const Problem& problem, const std::vector<std::vector<double>>& starts,
                                     const LbfgsOptions& opt) {
  std::vector<StartOutcome> out(starts.size());
  parallel_for(starts.size(), [&](std::size_t k) {
    out[k].result = lbfgs_minimize(
        [&](std::span<const double> x, std::span<double> g) { return problem.evaluate(x, g); }, starts[k], opt);
    out[k].ran = true;
  });
  return out;
}

/// Lowest objective wins; ties go to the lowest start index.
inline std::size_t best_start(const std::vector<StartOutcome>& outcomes) {
  std::size_t best = outcomes.size();
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (!std::isfinite(outcomes[k].result.f)) continue;
    if (best == outcomes.size() || outcomes[k].result.f < outcomes[best].result.f) best = k;
  }
  return best;
}

}  // namespace detail

/// Fits the law to one or more observed curves sharing a parameter tuple.
inline FitReport fit(std::span<const LossCurve> curves, const FitConfig& config = {}) {
  FitProblem problem(curves, config);
  bool enough = false;
  for (const auto& p : problem.prepared()) enough = enough || p.steps.size() >= kMinFitSamples;
  if (!enough) throw InputError("at least one curve needs >= " + std::to_string(kMinFitSamples) + " samples", "curves");
  if (config.fit_extension) {
    std::set<double> sizes;
    for (const auto& c : curves) sizes.insert(*c.n);
    if (sizes.size() < 2) throw InputError("extended fit needs at least two distinct model sizes", "curves");
  }

  std::vector<std::vector<double>> starts;
  for (const auto& g : config.init_grid) {
    g.validate();
    starts.push_back(problem.to_theta(g));
  }
  const auto outcomes = detail::run_starts(problem, starts, detail::fit_lbfgs_options(config.max_iterations));

  FitReport report;
  report.config = config;
  report.starts_tried = static_cast<int>(starts.size());
  report.unconstrained = problem.unconstrained();
  report.ill_conditioned = problem.ill_conditioned();
  const auto best = detail::best_start(outcomes);
  if (best == outcomes.size()) {
    report.objective = std::numeric_limits<double>::infinity();
    report.status = "infeasible";
    report.params = config.init_grid.front();
    throw FitConvergenceError(report);
  }
  const auto& r = outcomes[best].result;
  report.params = problem.from_theta(r.x);
  report.objective = r.f;
  report.converged = r.converged;
  report.status = std::string(to_string(r.status));
  report.iterations = r.iterations;

  std::vector<double> all_pred, all_obs;
  for (std::size_t c = 0; c < problem.prepared().size(); ++c) {
    const auto pred = problem.predict(report.params, c);
    const auto& obs = problem.prepared()[c].observed;
    const auto m = metrics(pred, obs);
    report.per_curve.push_back({problem.prepared()[c].label, m.r_squared, m.mean_rel_error});
    all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    all_obs.insert(all_obs.end(), obs.begin(), obs.end());
  }
  const auto pooled = metrics(all_pred, all_obs);
  report.r_squared = pooled.r_squared;
  report.mean_rel_error = pooled.mean_rel_error;

  const bool any_converged =
      std::any_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.result.converged; });
  if (!any_converged) throw FitConvergenceError(report);
  return report;
}

// ---------------------------------------------------------------------------
// endpoint power law

struct ChinchillaFit {
  double L0 = 0.0;
  double A = 0.0;
  double alpha = 0.0;
  double r_squared = 0.0;
  /// Mean Huber loss per endpoint.
  double huber = 0.0;
  bool converged = false;
};

namespace detail {

class PowerLawProblem {
 public:
  PowerLawProblem(std::vector<double> log_d, std::vector<double> log_loss, double delta)
      : log_d_(std::move(log_d)), log_loss_(std::move(log_loss)), delta_(delta) {}

  double evaluate(std::span<const double> t, std::span<double> grad) const {
    const double l0 = std::exp(t[0]), a = std::exp(t[1]), alpha = std::exp(t[2]);
    std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < log_d_.size(); ++i) {
      const double term = a * std::exp(-alpha * log_d_[i]);
      const double pred = l0 + term;
      if (!(pred > 0.0) || !std::isfinite(pred)) return std::numeric_limits<double>::infinity();
      const double r = std::log(pred) - log_loss_[i];
      total += huber(r, delta_);
      const double w = huber_slope(r, delta_) / pred;
      grad[0] += w * l0;
      grad[1] += w * term;
      grad[2] -= w * alpha * log_d_[i] * term;
    }
    return total;
  }

 private:
  std::vector<double> log_d_, log_loss_;
  double delta_;
};

}  // namespace detail

/// Fits L0 + A * d^-alpha to (d, loss) endpoints with the same Huber /
/// log-space / multi-start machinery as `fit`.
inline ChinchillaFit fit_chinchilla(std::span<const std::pair<double, double>> endpoints, double delta = 1e-3) {
  if (endpoints.size() < 3) throw InputError("at least three endpoints required", "endpoints");
  std::vector<double> log_d, log_loss, loss;
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    const auto [d, l] = endpoints[i];
    const auto field = "endpoints[" + std::to_string(i) + "]";
    if (!(d > 0.0) || !std::isfinite(d)) throw InputError("d must be positive", field);
    if (i > 0 && !(d > endpoints[i - 1].first)) throw InputError("d must be strictly increasing", field);
    if (!(l > 0.0) || !std::isfinite(l)) throw InputError("loss must be positive", field);
    log_d.push_back(std::log(d));
    log_loss.push_back(std::log(l));
    loss.push_back(l);
  }
  detail::PowerLawProblem problem(log_d, log_loss, delta);
  std::vector<std::vector<double>> starts;
  for (double l0 : {0.5, 1.5, 2.5, 3.5})
    for (double a : {1.0, 10.0, 100.0, 1000.0})
      for (double alpha : {0.2, 0.5, 1.0}) starts.push_back({std::log(l0), std::log(a), std::log(alpha)});

  LbfgsOptions opt = detail::fit_lbfgs_options(1000);
  opt.gradient_tolerance = 1e-14;
  opt.function_tolerance = 1e-14;
  std::vector<detail::StartOutcome> outcomes(starts.size());
  // sequential: callers (the reduction experiment) parallelize one level up
  for (std::size_t k = 0; k < starts.size(); ++k) {
    outcomes[k].result = lbfgs_minimize(
        [&](std::span<const double> x, std::span<double> g) { return problem.evaluate(x, g); }, starts[k], opt);
  }
  const auto best = detail::best_start(outcomes);
  if (best == outcomes.size()) throw FitConvergenceError(FitReport{});
  const auto& r = outcomes[best].result;

  ChinchillaFit out;
  out.L0 = std::exp(r.x[0]);
  out.A = std::exp(r.x[1]);
  out.alpha = std::exp(r.x[2]);
  out.converged = r.converged;
  out.huber = r.f / static_cast<double>(endpoints.size());
  std::vector<double> pred(endpoints.size());
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = out.L0 + out.A * std::pow(endpoints[i].first, -out.alpha);
  const auto m = metrics(pred, loss);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss_res += (pred[i] - loss[i]) * (pred[i] - loss[i]);
  out.r_squared = m.r_squared.value_or(ss_res == 0.0 ? 1.0 : 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const FitConfig& c) {
  return {{"delta", c.delta},
          {"lambda", c.lambda},
          {"max_iterations", c.max_iterations},
          {"fit_extension", c.fit_extension},
          {"variant", std::string(to_string(c.variant))},
          {"epsilon", c.epsilon},
          {"stride", c.stride},
          {"init_grid_size", c.init_grid.size()}};
}

inline FitConfig fit_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown_fields(
      j, {"delta", "lambda", "max_iterations", "fit_extension", "variant", "epsilon", "stride", "init_grid", "init_grid_size"},
      "config");
  FitConfig c;
  if (j.contains("delta")) c.delta = detail::json_real(j["delta"], "config.delta");
  if (j.contains("lambda")) c.lambda = detail::json_real(j["lambda"], "config.lambda");
  if (j.contains("max_iterations"))
    c.max_iterations = static_cast<int>(detail::json_int(j["max_iterations"], "config.max_iterations"));
  if (j.contains("fit_extension")) {
    if (!j["fit_extension"].is_boolean()) throw InputError("expected a boolean", "config.fit_extension");
    c.fit_extension = j["fit_extension"].get<bool>();
  }
  if (j.contains("variant")) {
    if (!j["variant"].is_string()) throw InputError("expected a string", "config.variant");
    c.variant = parse_fit_variant(j["variant"].get<std::string>());
  }
  if (j.contains("epsilon")) c.epsilon = detail::json_real(j["epsilon"], "config.epsilon");
  if (j.contains("stride")) c.stride = detail::json_int(j["stride"], "config.stride");
  if (j.contains("init_grid")) {
    if (!j["init_grid"].is_array()) throw InputError("expected an array", "config.init_grid");
    c.init_grid.clear();
    for (const auto& g : j["init_grid"]) c.init_grid.push_back(law_params_from_json(g));
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const FitReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per = nlohmann::json::array();
  for (const auto& c : r.per_curve)
    per.push_back({{"label", c.label}, {"r_squared", opt(c.r_squared)}, {"mean_rel_error", c.mean_rel_error}});
  return {{"params", to_json(r.params)},
          {"objective", r.objective},
          {"r_squared", opt(r.r_squared)},
          {"mean_rel_error", r.mean_rel_error},
          {"per_curve", per},
          {"starts_tried", r.starts_tried},
          {"converged", r.converged},
          {"status", r.status},
          {"iterations", r.iterations},
          {"unconstrained", r.unconstrained},
          {"ill_conditioned", r.ill_conditioned},
          {"config", to_json(r.config)}};
}

/// Reads the parameters and area settings back from a serialized report.
struct LoadedFit {
  LawParams params;
  double lambda = 0.999;
  double epsilon = 0.0;
};

inline LoadedFit loaded_fit_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("params")) throw InputError("missing 'params'", "fit");
  LoadedFit f;
  f.params = law_params_from_json(j["params"]);
  if (j.contains("config") && j["config"].is_object()) {
    const auto& c = j["config"];
    if (c.contains("lambda")) f.lambda = detail::json_real(c["lambda"], "config.lambda");
    if (c.contains("epsilon")) f.epsilon = detail::json_real(c["epsilon"], "config.epsilon");
  }
  AreaConfig{f.lambda, f.epsilon}.validate();
  return f;
}

}  // namespace anneal_law
