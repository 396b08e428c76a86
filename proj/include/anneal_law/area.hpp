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

// Forward area S1 and momentum-decayed annealing area S2 of a schedule.
//
//   S1(s) = sum_{i<=s} eta_i
//   m_i   = lambda * m_{i-1} + (eta_{i-1} - eta_i),   m_0 = 0, eta_0 := eta_1
//   S2(s) = sum_{i<=s} m_i            (or m_i * eta_i^epsilon, LR-weighted)
//
// Both are taken over LRSeries::area_etas.

#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "anneal_law/detail/numeric.hpp"
#include "anneal_law/error.hpp"
#include "anneal_law/schedule.hpp"

namespace anneal_law {

struct AreaConfig {
  double lambda = 0.999;
  /// LR-weight exponent; 0 disables the weighting.
  double epsilon = 0.0;

  void validate() const {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw InputError("must be in [0, 1)", "lambda");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InputError("must be >= 0", "epsilon");
  }
};

struct AreaSeries {
  std::vector<double> s1;
  std::vector<double> s2;
  std::vector<double> momentum;
  AreaConfig config;

  std::size_t size() const noexcept { return s1.size(); }
};

/// Maximum length accepted by compute_areas_bruteforce.
inline constexpr std::size_t kBruteforceMaxSteps = 10'000;

namespace detail {

inline double lr_weight(double eta, double epsilon) { return epsilon == 0.0 ? 1.0 : std::pow(eta, epsilon); }

}  // namespace detail

/// O(s) recurrence; S1 uses compensated summation, momentum and S2 extended precision.
inline AreaSeries compute_areas(const LRSeries& series, const AreaConfig& config = {}) {
  config.validate();
  const auto& eta = series.area_etas;
  const std::size_t n = eta.size();
  AreaSeries out;
  out.config = config;
  out.s1.resize(n);
  out.s2.resize(n);
  out.momentum.resize(n);

  detail::CompensatedSum s1;
  // momentum and S2 in extended precision: S2 can cancel to a tiny fraction
  // of the momentum mass after re-warmups
  long double m = 0.0L;
  long double s2 = 0.0L;
  const long double lambda = config.lambda;
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = i == 0 ? eta[0] : eta[i - 1];
    m = lambda * m + static_cast<long double>(prev - eta[i]);
    s1.add(eta[i]);
    s2 += m * static_cast<long double>(detail::lr_weight(eta[i], config.epsilon));
    out.momentum[i] = static_cast<double>(m);
    out.s1[i] = s1.value();
    out.s2[i] = static_cast<double>(s2);
  }
  return out;
}

/// Literal double-sum evaluation, O(s^2). Test oracle only: it shares no
/// state with the recurrence and raises lambda to each power directly.
inline AreaSeries compute_areas_bruteforce(const LRSeries& series, const AreaConfig& config = {}) {
  config.validate();
  const auto& eta = series.area_etas;
  const std::size_t n = eta.size();
  if (n > kBruteforceMaxSteps) {
    throw InputError("brute-force areas are capped at " + std::to_string(kBruteforceMaxSteps) + " steps",
                     "total_steps");
  }
  std::vector<double> powers(n);
  for (std::size_t p = 0; p < n; ++p) powers[p] = std::pow(config.lambda, static_cast<double>(p));
  // pow(0, 0) == 1, so lambda = 0 keeps only the k == i term.

  std::vector<double> delta(n);
  for (std::size_t k = 0; k < n; ++k) delta[k] = (k == 0 ? eta[0] : eta[k - 1]) - eta[k];

  AreaSeries out;
  out.config = config;
  out.s1.resize(n);
  out.s2.resize(n);
  out.momentum.resize(n);
  long double s1 = 0.0L;
  long double s2 = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double m = 0.0L;
    for (std::size_t k = 0; k <= i; ++k) m += static_cast<long double>(delta[k]) * powers[i - k];
    s1 += eta[i];
    s2 += m * detail::lr_weight(eta[i], config.epsilon);
    out.momentum[i] = static_cast<double>(m);
    out.s1[i] = static_cast<double>(s1);
    out.s2[i] = static_cast<double>(s2);
  }
  return out;
}

/// CSV with header `step,lr,s1,s2,momentum`; `lr` is the schedule's actual
/// per-step LR.
inline void write_areas_csv(std::ostream& os, const LRSeries& series, const AreaSeries& areas) {
  using detail::format_double;
  os << "step,lr,s1,s2,momentum\n";
  for (std::size_t i = 0; i < areas.size(); ++i) {
    os << (i + 1) << ',' << format_double(series.etas[i]) << ',' << format_double(areas.s1[i]) << ','
       << format_double(areas.s2[i]) << ',' << format_double(areas.momentum[i]) << '\n';
  }
}

}  // namespace anneal_law
