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

// Limited-memory BFGS with a strong-Wolfe line search (Nocedal & Wright,
// Algorithms 3.5/3.6 and 7.4). Sized for the handful of parameters the law
// fits; vectors are plain std::vector<double>.
//
// The objective has the signature
//   double f(std::span<const double> x, std::span<double> grad)
// and may return a non-finite value to mark x infeasible; the line search
// then backtracks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

namespace anneal_law {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 1000;
  /// Stop when ||grad||_inf <= gradient_tolerance.
  double gradient_tolerance = 1e-10;
  /// Stop when the objective decreased by less than
  /// function_tolerance * max(|f|, floor) over the last `past` iterations.
  double function_tolerance = 1e-13;
  double function_floor = 1e-300;
  int past = 5;
  int max_linesearch = 50;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  /// A line-search failure still counts as converged when the gradient is
  /// below this bound (the objective cannot be reduced at double precision).
  double stall_gradient_tolerance = 1e-6;
};

enum class LbfgsStatus { gradient_converged, function_converged, max_iterations, line_search_failed, infeasible_start };

inline std::string_view to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::gradient_converged: return "gradient_converged";
    case LbfgsStatus::function_converged: return "function_converged";
    case LbfgsStatus::max_iterations: return "max_iterations";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
    case LbfgsStatus::infeasible_start: return "infeasible_start";
  }
  return "?";
}

struct LbfgsResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  LbfgsStatus status = LbfgsStatus::infeasible_start;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

/// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb),
/// safeguarded into the middle 80% of the interval; bisection when the
/// interpolant is unusable.
inline double interpolate(double a, double fa, double ga, double b, double fb, double gb) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  double t = 0.5 * (a + b);
  if (std::isfinite(fb) && std::isfinite(gb)) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b - a);
      const double denom = gb - ga + 2.0 * d2;
      if (denom != 0.0) {
        const double c = b - (b - a) * (gb + d2 - d1) / denom;
        if (std::isfinite(c)) t = c;
      }
    }
  }
  return std::clamp(t, lo + margin, hi - margin);
}

}  // namespace detail

template <typename Objective>
LbfgsResult lbfgs_minimize(Objective&& objective, std::vector<double> x0, const LbfgsOptions& opt = {}) {
  using detail::dot;
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);

  std::vector<double> g(n), d(n), x_trial(n), g_trial(n);
  auto evaluate = [&](std::span<const double> x, std::span<double> grad) {
    ++res.evaluations;
    const double f = objective(x, grad);
    if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();
    for (double v : grad) {
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    }
    return f;
  };

  double f = evaluate(res.x, g);
  res.f = f;
  if (!std::isfinite(f)) {
    res.status = LbfgsStatus::infeasible_start;
    return res;
  }
  res.gradient_norm = detail::inf_norm(g);
  if (res.gradient_norm <= opt.gradient_tolerance) {
    res.status = LbfgsStatus::gradient_converged;
    res.converged = true;
    return res;
  }

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> f_hist{f};
  std::vector<double> alpha_buf(static_cast<std::size_t>(opt.memory));

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    res.iterations = iter;

    // two-loop recursion: d = -H g
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    const std::size_t m = s_hist.size();
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho_hist[k] * dot(s_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha_buf[k] * y_hist[k][i];
    }
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += s_hist[k][i] * (alpha_buf[k] - beta);
    }

    double dphi0 = dot(g, d);
    if (!(dphi0 < 0.0)) {
      // lost descent; restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dphi0 = dot(g, d);
    }

    // strong-Wolfe line search along d
    const double phi0 = f;
    double step = m == 0 ? std::min(1.0, 1.0 / detail::inf_norm(d)) : 1.0;
    double prev_step = 0.0, prev_phi = phi0, prev_dphi = dphi0;
    double accepted_step = 0.0, accepted_phi = phi0;
    bool found = false;
    bool reevaluate = false;
    auto trial = [&](double t, double& dphi) {
      for (std::size_t i = 0; i < n; ++i) x_trial[i] = res.x[i] + t * d[i];
      const double phi = evaluate(x_trial, g_trial);
      dphi = std::isfinite(phi) ? dot(g_trial, d) : std::numeric_limits<double>::quiet_NaN();
      return phi;
    };
    auto armijo_ok = [&](double t, double phi) { return std::isfinite(phi) && phi <= phi0 + opt.wolfe_c1 * t * dphi0; };

    auto zoom = [&](double lo, double phi_lo, double dphi_lo, double hi, double phi_hi, double dphi_hi) {
      for (int k = 0; k < opt.max_linesearch; ++k) {
        const double t = detail::interpolate(lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi);
        double dphi = 0.0;
        const double phi = trial(t, dphi);
        if (!armijo_ok(t, phi) || phi >= phi_lo) {
          hi = t;
          phi_hi = phi;
          dphi_hi = dphi;
        } else {
          if (std::fabs(dphi) <= -opt.wolfe_c2 * dphi0) {
            accepted_step = t;
            accepted_phi = phi;
            return true;
          }
          if (dphi * (hi - lo) >= 0.0) {
            hi = lo;
            phi_hi = phi_lo;
            dphi_hi = dphi_lo;
          }
          lo = t;
          phi_lo = phi;
          dphi_lo = dphi;
        }
        if (std::fabs(hi - lo) <= 1e-16 * std::max(1.0, std::fabs(lo))) break;
      }
      // fall back to the best point with sufficient decrease, if any
      if (lo > 0.0 && phi_lo < phi0) {
        accepted_step = lo;
        accepted_phi = phi_lo;
        reevaluate = true;
        return true;
      }
      return false;
    };

    for (int k = 0; k < opt.max_linesearch; ++k) {
      double dphi = 0.0;
      const double phi = trial(step, dphi);
      if (!armijo_ok(step, phi) || (k > 0 && phi >= prev_phi)) {
        found = zoom(prev_step, prev_phi, prev_dphi, step, phi, dphi);
        break;
      }
      if (std::fabs(dphi) <= -opt.wolfe_c2 * dphi0) {
        accepted_step = step;
        accepted_phi = phi;
        found = true;
        break;
      }
      if (dphi >= 0.0) {
        found = zoom(step, phi, dphi, prev_step, prev_phi, prev_dphi);
        break;
      }
      prev_step = step;
      prev_phi = phi;
      prev_dphi = dphi;
      step *= 2.0;
    }

    if (!found) {
      res.status = LbfgsStatus::line_search_failed;
      res.converged = res.gradient_norm <= opt.stall_gradient_tolerance;
      return res;
    }

    double f_new = accepted_phi;
    if (reevaluate) {
      for (std::size_t i = 0; i < n; ++i) x_trial[i] = res.x[i] + accepted_step * d[i];
      f_new = evaluate(x_trial, g_trial);
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_trial[i] - res.x[i];
      y[i] = g_trial[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-16 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (s_hist.size() == static_cast<std::size_t>(opt.memory)) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }

    res.x = x_trial;
    g = g_trial;
    f = f_new;
    res.f = f;
    res.gradient_norm = detail::inf_norm(g);
    f_hist.push_back(f);

    if (res.gradient_norm <= opt.gradient_tolerance) {
      res.status = LbfgsStatus::gradient_converged;
      res.converged = true;
      return res;
    }
    if (static_cast<int>(f_hist.size()) > opt.past) {
      const double f_past = f_hist[f_hist.size() - 1 - static_cast<std::size_t>(opt.past)];
      const double scale = std::max({std::fabs(f), std::fabs(f_past), opt.function_floor});
      if ((f_past - f) <= opt.function_tolerance * scale) {
        res.status = LbfgsStatus::function_converged;
        res.converged = true;
        return res;
      }
    }
  }
  res.status = LbfgsStatus::max_iterations;
  return res;
}

}  // namespace anneal_law
