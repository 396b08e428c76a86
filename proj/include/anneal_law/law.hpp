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

// Loss-curve law with LR annealing:
//
//   L(s)    = L0 + A * S1^-alpha - C * S2
//   L(s, N) = L0 + A * S1^-alpha + B * N^-beta - C * S2 * N^gamma
//
// plus the S2^zeta variant and the data/model power law it reduces to.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "anneal_law/area.hpp"
#include "anneal_law/error.hpp"

namespace anneal_law {

struct LawParams {
  double L0 = 0.0;
  double A = 0.0;
  double C = 0.0;
  double alpha = 0.0;
  std::optional<double> B;
  std::optional<double> beta;
  std::optional<double> gamma;
  /// Exponent on S2; 1 is the base law.
  double zeta = 1.0;

  bool has_extension() const noexcept { return B && beta && gamma; }

  void validate() const {
    auto positive = [](double v, const char* f) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError("must be a positive finite number", f);
    };
    positive(L0, "L0");
    positive(A, "A");
    positive(C, "C");
    positive(alpha, "alpha");
    positive(zeta, "zeta");
    if (B) positive(*B, "B");
    if (beta) positive(*beta, "beta");
    if (gamma) positive(*gamma, "gamma");
  }

  bool operator==(const LawParams&) const = default;
};

/// Fitted tuple reported for the 20K-step constant + cosine runs.
inline LawParams reference_params() { return {2.628, 0.429, 0.411, 0.550}; }

namespace detail {

inline double s2_power(double s2, double zeta) {
  if (zeta == 1.0) return s2;
  if (s2 < 0.0) throw DomainError("zeta variant undefined for negative S2");
  return std::pow(s2, zeta);
}

}  // namespace detail

/// Single-point evaluation from raw areas.
inline double eval_point(const LawParams& p, double s1, double s2) {
  return p.L0 + p.A * std::pow(s1, -p.alpha) - p.C * detail::s2_power(s2, p.zeta);
}

inline std::vector<double> eval_curve(const LawParams& p, const AreaSeries& areas) {
  if (areas.size() == 0) throw InputError("empty area series", "areas");
  std::vector<double> loss(areas.size());
  for (std::size_t i = 0; i < areas.size(); ++i) {
    if (!(areas.s1[i] > 0.0)) throw DomainError("S1 must be positive at step " + std::to_string(i + 1));
    loss[i] = eval_point(p, areas.s1[i], areas.s2[i]);
  }
  return loss;
}

/// Model-size extended curve for `n` non-embedding parameters.
inline std::vector<double> eval_curve_n(const LawParams& p, const AreaSeries& areas, double n) {
  if (!p.has_extension()) throw InputError("B, beta and gamma are required", "params");
  if (!(n > 0.0)) throw InputError("must be positive", "n");
  if (areas.size() == 0) throw InputError("empty area series", "areas");
  const double size_term = *p.B * std::pow(n, -*p.beta);
  const double anneal_scale = p.C * std::pow(n, *p.gamma);
  std::vector<double> loss(areas.size());
  for (std::size_t i = 0; i < areas.size(); ++i) {
    if (!(areas.s1[i] > 0.0)) throw DomainError("S1 must be positive at step " + std::to_string(i + 1));
    loss[i] = p.L0 + p.A * std::pow(areas.s1[i], -p.alpha) + size_term -
              anneal_scale * detail::s2_power(areas.s2[i], p.zeta);
  }
  return loss;
}

/// L0 + A * D^-alpha + B * N^-beta. B = 0 gives the data-only power law.
struct ChinchillaParams {
  double L0 = 0.0;
  double A = 0.0;
  double alpha = 0.0;
  double B = 0.0;
  double beta = 0.0;
};

inline double eval_chinchilla(const ChinchillaParams& p, double d, double n = 1.0) {
  if (!(d > 0.0)) throw InputError("must be positive", "d");
  if (!(n > 0.0)) throw InputError("must be positive", "n");
  double loss = p.L0 + p.A * std::pow(d, -p.alpha);
  if (p.B != 0.0) loss += p.B * std::pow(n, -p.beta);
  return loss;
}

/// Data-only power law a constant schedule at `eta` reduces to, with D in steps.
inline ChinchillaParams constant_schedule_equivalent(const LawParams& p, double eta) {
  return {p.L0, p.A * std::pow(eta, -p.alpha), p.alpha, 0.0, 0.0};
}

struct Partials {
  double dL_dS1 = 0.0;
  double dL_dS2 = 0.0;
};

inline Partials partials(const LawParams& p, double s1) {
  if (!(s1 > 0.0)) throw InputError("must be positive", "s1");
  return {-p.alpha * p.A * std::pow(s1, -p.alpha - 1.0), -p.C};
}

/// Forward area at which |dL/dS1| falls to |dL/dS2| = C.
inline double crossover_area(const LawParams& p) { return std::pow(p.alpha * p.A / p.C, 1.0 / (p.alpha + 1.0)); }

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const LawParams& p) {
  nlohmann::json j{{"L0", p.L0}, {"A", p.A}, {"C", p.C}, {"alpha", p.alpha}};
  if (p.B) j["B"] = *p.B;
  if (p.beta) j["beta"] = *p.beta;
  if (p.gamma) j["gamma"] = *p.gamma;
  if (p.zeta != 1.0) j["zeta"] = p.zeta;
  return j;
}

inline LawParams law_params_from_json(const nlohmann::json& j) {
  detail::reject_unknown_fields(j, {"L0", "A", "C", "alpha", "B", "beta", "gamma", "zeta"}, "params");
  auto req = [&](const char* k) {
    if (!j.contains(k)) throw InputError("required", std::string("params.") + k);
    return detail::json_real(j[k], std::string("params.") + k);
  };
  LawParams p{req("L0"), req("A"), req("C"), req("alpha")};
  if (j.contains("B")) p.B = detail::json_real(j["B"], "params.B");
  if (j.contains("beta")) p.beta = detail::json_real(j["beta"], "params.beta");
  if (j.contains("gamma")) p.gamma = detail::json_real(j["gamma"], "params.gamma");
  if (j.contains("zeta")) p.zeta = detail::json_real(j["zeta"], "params.zeta");
  p.validate();
  return p;
}

}  // namespace anneal_law
