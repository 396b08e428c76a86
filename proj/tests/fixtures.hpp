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

// Shared test fixtures: the reference setup, synthetic curves and the five
// held-out schedule families.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "anneal_law/anneal_law.hpp"

namespace fixtures {

namespace al = anneal_law;

inline constexpr double kEtaMax = 2e-4;
inline constexpr std::int64_t kWarmup = 500;

/// Standard normal draws by Box-Muller over the library's pinned uniform.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = rng_.unit();
    const double u2 = rng_.unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  al::Rng rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Samples the law's prediction of `spec` at every `every`-th step,
/// multiplied by exp(sigma * z).
inline al::LossCurve synthetic_curve(const al::LawParams& p, const al::ScheduleSpec& spec, double sigma = 0.0,
                                     std::uint64_t seed = 1, std::int64_t every = 1, double lambda = 0.999,
                                     const char* label = "") {
  const auto pred = al::predict(p, spec, {lambda, 0.0});
  Gaussian g(seed);
  al::LossCurve c;
  c.schedule = spec;
  c.label = label;
  for (std::int64_t s = every; s <= spec.total_steps; s += every) {
    double loss = pred.loss[static_cast<std::size_t>(s - 1)];
    if (sigma > 0.0) loss *= std::exp(sigma * g());
    c.samples.push_back({s, loss});
  }
  return c;
}

/// Constant and cosine (eta_min = 0) training runs of `total` steps.
inline std::vector<al::ScheduleSpec> training_specs(std::int64_t total = 20000) {
  return {al::constant_schedule(total, kEtaMax, kWarmup), al::cosine_schedule(total, kEtaMax, 0.0, kWarmup)};
}

struct Family {
  const char* name;
  al::ScheduleSpec spec;
};

/// Constant, cosine to 0.1 eta_max, multi-step cosine 80/10/10, WSD with
/// 20% cosine annealing to 0, and a cyclic schedule with two re-warmups.
inline std::vector<Family> held_out_families(std::int64_t total = 60000) {
  // warmup and re-warmups shrink for short totals; 500 and 2000 steps at 60K
  const std::int64_t warm = std::min(kWarmup, total / 10);
  std::vector<Family> out;
  out.push_back({"constant", al::constant_schedule(total, kEtaMax, warm)});
  out.push_back({"cosine", al::cosine_schedule(total, kEtaMax, 0.1 * kEtaMax, warm)});
  al::ScheduleSpec ms;
  ms.kind = al::ScheduleKind::multi_step_cosine;
  ms.total_steps = total;
  ms.warmup_steps = warm;
  ms.eta_max = kEtaMax;
  ms.eta_min = 0.0;
  out.push_back({"multi_step_cosine", ms});
  out.push_back({"wsd", al::wsd_schedule(total, kEtaMax, 0.0, 0.2, al::AnnealFn::cosine, warm)});
  al::ScheduleSpec cy;
  cy.kind = al::ScheduleKind::cyclic;
  cy.total_steps = total;
  cy.warmup_steps = warm;
  cy.eta_max = kEtaMax;
  cy.eta_min = 0.2 * kEtaMax;
  const std::int64_t third = (total - warm) / 3;
  const std::int64_t rewarm = std::min<std::int64_t>(2000, third / 4);
  cy.cycle_spec = {{0, third}, {rewarm, third - rewarm}, {rewarm, total - warm - 2 * third - rewarm}};
  out.push_back({"cyclic", cy});
  return out;
}

}  // namespace fixtures
