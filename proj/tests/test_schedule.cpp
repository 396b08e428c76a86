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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "anneal_law/schedule.hpp"
#include "fixtures.hpp"

namespace al = anneal_law;

namespace {

al::ScheduleSpec wsd_tail(al::AnnealFn fn, std::int64_t total, std::int64_t anneal, double eta_min = 0.0) {
  al::ScheduleSpec s;
  s.kind = al::ScheduleKind::wsd;
  s.total_steps = total;
  s.eta_max = 2e-4;
  s.eta_min = eta_min;
  s.stable_end = total - anneal;
  s.anneal_fn = fn;
  return s;
}

std::vector<al::ScheduleSpec> one_of_each(std::int64_t total) {
  std::vector<al::ScheduleSpec> out;
  for (const auto& f : fixtures::held_out_families(total)) out.push_back(f.spec);
  al::ScheduleSpec pl;
  pl.kind = al::ScheduleKind::piecewise_linear;
  pl.total_steps = total;
  pl.warmup_steps = 10;
  pl.eta_max = 3e-4;
  pl.points = {{11, 3e-4}, {total / 2, 1e-4}, {total - 5, 2e-4}, {total, 0.0}};
  out.push_back(pl);
  for (auto fn : {al::AnnealFn::linear, al::AnnealFn::exponential, al::AnnealFn::one_sqrt, al::AnnealFn::one_square})
    out.push_back(al::wsd_schedule(total, 2e-4, 1e-5, 0.3, fn, 20));
  out.push_back(al::cosine_schedule(total, 2e-4, 0.0, 0, total / 2));
  out.push_back(al::cosine_schedule(total, 2e-4, 0.0, 0, 2 * total));
  return out;
}

}  // namespace

TEST(Schedule, ConstantIsFlat) {
  const auto s = al::materialize(al::constant_schedule(5, 2e-4));
  EXPECT_EQ(s.etas, std::vector<double>(5, 2e-4));
  EXPECT_EQ(s.area_etas, s.etas);
}

TEST(Schedule, OneSqrtAnnealingSteps) {
  const auto s = al::materialize(wsd_tail(al::AnnealFn::one_sqrt, 10, 4));
  // 1 - sqrt(k/4), k = 1..4
  const double expected[] = {0.5, 0.29289321881345243, 0.1339745962155614, 0.0};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(s.etas[6 + k] / 2e-4, expected[k], 1e-15) << k;
  for (int i = 0; i < 6; ++i) EXPECT_EQ(s.etas[i], 2e-4);
}

TEST(Schedule, CosineMidpointIsHalfPeak) {
  const auto s = al::materialize(al::cosine_schedule(100, 2e-4, 0.0));
  EXPECT_NEAR(s.etas[49], 1e-4, 1e-18);
  EXPECT_EQ(s.etas.back(), 0.0);
}

TEST(Schedule, CosineMatchesFormula) {
  const auto spec = al::cosine_schedule(1000, 3e-4, 3e-5, 100, 800);
  const auto s = al::materialize(spec);
  for (std::int64_t i = 101; i <= 1000; ++i) {
    const double expect =
        i >= 800 ? 3e-5 : 3e-5 + (3e-4 - 3e-5) * 0.5 * (1 + std::cos(std::numbers::pi * (i - 100) / 700.0));
    EXPECT_NEAR(s.etas[i - 1], expect, 1e-18) << i;
  }
}

TEST(Schedule, CosineLongerCycleIsTruncated) {
  const auto s = al::materialize(al::cosine_schedule(100, 2e-4, 0.0, 0, 200));
  // halfway through a 200-step cycle
  EXPECT_NEAR(s.etas[99], 1e-4, 1e-18);
}

TEST(Schedule, WarmupConvention) {
  const auto s = al::materialize(al::cosine_schedule(1000, 2e-4, 0.0, 100));
  for (int i = 1; i <= 100; ++i) {
    EXPECT_DOUBLE_EQ(s.etas[i - 1], 2e-4 * i / 100.0);
    EXPECT_EQ(s.area_etas[i - 1], 2e-4);
  }
  for (int i = 101; i <= 1000; ++i) EXPECT_EQ(s.area_etas[i - 1], s.etas[i - 1]);
  EXPECT_EQ(s.warmup_steps, 100);
}

TEST(AnnealF, Examples) {
  EXPECT_EQ(al::anneal_f(al::AnnealFn::one_square, 20, 10, 20), 0.0);
  EXPECT_NEAR(al::anneal_f(al::AnnealFn::one_sqrt, 15, 10, 20), 0.29289321881345243, 1e-15);
  EXPECT_DOUBLE_EQ(al::anneal_f(al::AnnealFn::linear, 15, 10, 20), 0.5);
  EXPECT_NEAR(al::anneal_f(al::AnnealFn::cosine, 15, 10, 20), 0.5, 1e-15);
  EXPECT_NEAR(al::anneal_f(al::AnnealFn::one_square, 15, 10, 20), 0.75, 1e-15);
}

TEST(AnnealF, Exponential) {
  EXPECT_NEAR(al::anneal_f(al::AnnealFn::exponential, 15, 10, 20), std::pow(10.0, -1.5), 1e-15);
  EXPECT_EQ(al::anneal_f(al::AnnealFn::exponential, 20, 10, 20), 0.0);
  double prev = 1.0;
  for (int s = 11; s <= 20; ++s) {
    const double v = al::anneal_f(al::AnnealFn::exponential, s, 10, 20);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(AnnealF, OutOfRange) {
  EXPECT_THROW(al::anneal_f(al::AnnealFn::linear, 10, 10, 20), al::InputError);
  EXPECT_THROW(al::anneal_f(al::AnnealFn::linear, 21, 10, 20), al::InputError);
  EXPECT_THROW(al::anneal_f(al::AnnealFn::linear, 5, 10, 10), al::InputError);
}

TEST(Schedule, ParseNames) {
  EXPECT_EQ(al::parse_anneal_fn("1-sqrt"), al::AnnealFn::one_sqrt);
  EXPECT_EQ(al::parse_anneal_fn("one_square"), al::AnnealFn::one_square);
  EXPECT_THROW(al::parse_anneal_fn("sigmoid"), al::InputError);
  EXPECT_EQ(al::parse_schedule_kind("multi_step_cosine"), al::ScheduleKind::multi_step_cosine);
  EXPECT_THROW(al::parse_schedule_kind("step"), al::InputError);
}

TEST(ScheduleProperty, WithinBoundsAndDeterministic) {
  for (std::int64_t total : {50, 997, 6000}) {
    for (const auto& spec : one_of_each(total)) {
      const auto a = al::materialize(spec);
      const auto b = al::materialize(spec);
      ASSERT_EQ(a.etas.size(), static_cast<std::size_t>(total));
      ASSERT_EQ(a.area_etas.size(), a.etas.size());
      EXPECT_EQ(a.etas, b.etas);
      EXPECT_EQ(a.area_etas, b.area_etas);
      for (std::size_t i = 0; i < a.etas.size(); ++i) {
        ASSERT_TRUE(std::isfinite(a.etas[i]));
        ASSERT_GE(a.etas[i], 0.0);
        ASSERT_LE(a.etas[i], spec.eta_max);
        ASSERT_LE(a.area_etas[i], spec.eta_max);
      }
    }
  }
}

TEST(ScheduleProperty, WsdEndsAtEtaMin) {
  for (auto fn : {al::AnnealFn::cosine, al::AnnealFn::linear, al::AnnealFn::one_sqrt, al::AnnealFn::one_square,
                  al::AnnealFn::exponential}) {
    for (double eta_min : {0.0, 2e-5}) {
      const auto s = al::materialize(wsd_tail(fn, 300, 37, eta_min));
      EXPECT_EQ(s.etas.back(), eta_min) << al::to_string(fn);
    }
  }
}

TEST(Schedule, MultiStepStages) {
  al::ScheduleSpec s;
  s.kind = al::ScheduleKind::multi_step_cosine;
  s.total_steps = 1000;
  s.eta_max = 1.0;
  const auto lr = al::materialize(s);
  // stage 1 covers steps 1..800 and ends at the second stage's level
  EXPECT_NEAR(lr.etas[799], 0.316, 1e-12);
  EXPECT_NEAR(lr.etas[899], 0.1, 1e-12);
  EXPECT_EQ(lr.etas.back(), 0.0);
  for (std::size_t i = 1; i < lr.etas.size(); ++i) EXPECT_LE(lr.etas[i], lr.etas[i - 1]);
}

TEST(Schedule, CyclicRewarms) {
  al::ScheduleSpec s;
  s.kind = al::ScheduleKind::cyclic;
  s.total_steps = 100;
  s.eta_max = 1.0;
  s.eta_min = 0.2;
  s.cycle_spec = {{0, 40}, {10, 40}};
  const auto lr = al::materialize(s);
  EXPECT_NEAR(lr.etas[39], 0.2, 1e-15);
  EXPECT_NEAR(lr.etas[44], 0.6, 1e-15);  // halfway up the re-warmup
  EXPECT_EQ(lr.etas[49], 1.0);
  EXPECT_NEAR(lr.etas[89], 0.2, 1e-15);
  for (int i = 90; i < 100; ++i) EXPECT_NEAR(lr.etas[i], 0.2, 1e-15);
}

TEST(Schedule, CyclicPhasesMustFit) {
  al::ScheduleSpec s;
  s.kind = al::ScheduleKind::cyclic;
  s.total_steps = 100;
  s.cycle_spec = {{0, 60}, {10, 40}};
  try {
    al::materialize(s);
    FAIL();
  } catch (const al::InputError& e) {
    EXPECT_EQ(e.field(), "cycle_spec[1]");
  }
}

TEST(Schedule, PiecewiseLinearInterpolates) {
  al::ScheduleSpec s;
  s.kind = al::ScheduleKind::piecewise_linear;
  s.total_steps = 30;
  s.eta_max = 1.0;
  s.points = {{5, 1.0}, {15, 0.5}, {25, 0.0}};
  const auto lr = al::materialize(s);
  EXPECT_EQ(lr.etas[0], 1.0);
  EXPECT_DOUBLE_EQ(lr.etas[9], 0.75);
  EXPECT_DOUBLE_EQ(lr.etas[19], 0.25);
  EXPECT_EQ(lr.etas[29], 0.0);
}

TEST(Schedule, ValidationNamesFields) {
  auto field_of = [](const al::ScheduleSpec& s) {
    try {
      s.validate();
    } catch (const al::InputError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  auto s = al::constant_schedule(10, 2e-4);
  s.eta_min = 3e-4;
  EXPECT_EQ(field_of(s), "eta_min");
  s = al::constant_schedule(10, 2e-4, 10);
  EXPECT_EQ(field_of(s), "warmup_steps");
  s = wsd_tail(al::AnnealFn::linear, 10, 2);
  s.stable_end = 11;
  EXPECT_EQ(field_of(s), "stable_end");
  al::ScheduleSpec pl;
  pl.kind = al::ScheduleKind::piecewise_linear;
  pl.total_steps = 10;
  pl.points = {{3, 1e-4}, {3, 1e-4}};
  EXPECT_EQ(field_of(pl), "points[1]");
  pl.points = {{3, 1e-4}};
  pl.warmup_steps = 5;
  EXPECT_EQ(field_of(pl), "points[0]");
}

TEST(ScheduleJson, RoundTripsEveryFamily) {
  for (const auto& spec : one_of_each(3000)) {
    const auto j = al::to_json(spec);
    EXPECT_EQ(al::schedule_from_json(j), spec) << j.dump();
    EXPECT_EQ(al::schedule_from_json(nlohmann::json::parse(j.dump())), spec);
  }
}

TEST(ScheduleJson, Strict) {
  auto j = nlohmann::json::parse(R"({"kind":"wsd","total_steps":100,"eta_max":2e-4,"stable_end":80,"anneal_fn":"1-sqrt"})");
  EXPECT_EQ(al::schedule_from_json(j).anneal_fn, al::AnnealFn::one_sqrt);
  j["anneal_fn"] = "sigmoid";
  EXPECT_THROW(al::schedule_from_json(j), al::InputError);
  j["anneal_fn"] = "cosine";
  j["colour"] = 1;
  try {
    al::schedule_from_json(j);
    FAIL();
  } catch (const al::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
  j.erase("colour");
  j["total_steps"] = 1.5;
  EXPECT_THROW(al::schedule_from_json(j), al::InputError);
}

TEST(Schedule, CsvExport) {
  std::ostringstream os;
  al::write_lr_csv(os, al::materialize(al::constant_schedule(2, 0.5)));
  EXPECT_EQ(os.str(), "step,lr\n1,0.5\n2,0.5\n");
}

TEST(Schedule, WsdBuilder) {
  const auto s = al::wsd_schedule(1000, 2e-4, 0.0, 0.2, al::AnnealFn::cosine, 100);
  EXPECT_EQ(*s.stable_end, 800);
  // ratio 1 with cosine equals the full cosine after warmup
  const auto w = al::materialize(al::wsd_schedule(1000, 2e-4, 0.0, 1.0, al::AnnealFn::cosine, 100));
  const auto c = al::materialize(al::cosine_schedule(1000, 2e-4, 0.0, 100));
  for (std::size_t i = 0; i < w.etas.size(); ++i) EXPECT_NEAR(w.etas[i], c.etas[i], 1e-18);
  EXPECT_THROW(al::wsd_schedule(100, 2e-4, 0.0, 0.0, al::AnnealFn::cosine), al::InputError);
}
