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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anneal_law/analysis.hpp"
#include "fixtures.hpp"

namespace al = anneal_law;

namespace {

const al::LawParams kRef = al::reference_params();

al::ScheduleSpec cpt_continuation() { return al::cosine_schedule(100000, 4e-4, 0.0, 0); }

}  // namespace

TEST(Predict, DecompositionSumsToLoss) {
  for (const auto& f : fixtures::held_out_families(6000)) {
    const auto p = al::predict(kRef, f.spec);
    const auto d = al::decompose(kRef, f.spec);
    for (std::size_t i = 0; i < p.loss.size(); ++i)
      ASSERT_NEAR(d.L0 + d.s1_term[i] + d.s2_term[i], p.loss[i], 1e-13) << f.name;
  }
}

TEST(Predict, WsdGainComesFromAnnealingArea) {
  const auto c = al::decompose(kRef, al::constant_schedule(20000, 2e-4, 500));
  const auto w = al::decompose(kRef, al::wsd_schedule(20000, 2e-4, 0.0, 0.2, al::AnnealFn::cosine, 500));
  const double s1_loss = w.s1_term.back() - c.s1_term.back();
  const double s2_gain = -w.s2_term.back();
  EXPECT_GT(s1_loss, 0.0);
  EXPECT_GT(s2_gain, 5.0 * s1_loss);
  EXPECT_LT(al::final_loss(kRef, al::wsd_schedule(20000, 2e-4, 0.0, 0.2, al::AnnealFn::cosine, 500)),
            al::final_loss(kRef, al::constant_schedule(20000, 2e-4, 500)));
}

TEST(SweepCosine, OptimumAt60K) {
  const std::vector<double> cf{0.5, 1.0, 2.0}, mf{0.0, 0.1};
  const auto r = al::sweep_cosine(kRef, 60000, cf, mf);
  ASSERT_EQ(r.final_losses.size(), cf.size() * mf.size());
  const auto& best = r.axis[r.argmin_index];
  EXPECT_EQ(best["cycle_factor"].get<double>(), 1.0);
  EXPECT_EQ(best["min_lr_frac"].get<double>(), 0.0);
  EXPECT_EQ(best["cycle_T"].get<std::int64_t>(), 60000);
}

TEST(SweepCosine, FineGridFavoursSlightlyLongerCycle) {
  // momentum lag at lambda = 0.999: the last annealing steps have not fully
  // entered S2 by the final step
  const auto cf = al::default_cycle_factors();
  const auto mf = al::default_min_lr_fracs();
  const auto r = al::sweep_cosine(kRef, 60000, cf, mf);
  EXPECT_EQ(r.axis[r.argmin_index]["cycle_factor"].get<double>(), 1.25);
  EXPECT_NEAR(r.final_losses[r.argmin_index], 2.69697, 5e-6);
}

TEST(SweepCosine, SingleCellAndDegenerateRange) {
  const std::vector<double> one{1.0}, full{1.0};
  al::SweepContext ctx;
  ctx.keep_curves = true;
  const auto r = al::sweep_cosine(kRef, 3000, one, full, ctx);
  ASSERT_EQ(r.final_losses.size(), 1u);
  EXPECT_EQ(r.argmin_index, 0u);
  ASSERT_TRUE(r.full_curves);
  // eta_min == eta_max is a constant schedule
  EXPECT_NEAR(r.final_losses[0], al::final_loss(kRef, al::constant_schedule(3000, 2e-4, 500)), 1e-14);
  const std::vector<double> none;
  EXPECT_THROW(al::sweep_cosine(kRef, 3000, none, full), al::InputError);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(al::sweep_cosine(kRef, 3000, one, bad), al::InputError);
}

TEST(Crossover, ConstantWinsShortCosineWinsLong) {
  const std::vector<std::int64_t> totals{5000, 10000, 20000, 50000, 100000};
  const auto r = al::crossover_constant_cosine(kRef, totals);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(r.constant.final_losses[i], r.cosine.final_losses[i]) << totals[i];
  for (std::size_t i = 3; i < 5; ++i) EXPECT_GT(r.constant.final_losses[i], r.cosine.final_losses[i]) << totals[i];
  ASSERT_TRUE(r.crossover_total);
  EXPECT_EQ(*r.crossover_total, 50000);
  EXPECT_NEAR(r.s1_star, 0.69904001805490883, 1e-14);
  EXPECT_NEAR(r.s1_star_steps, 0.69904001805490883 / 2e-4, 1e-9);
  const std::vector<std::int64_t> unordered{10000, 5000};
  EXPECT_THROW(al::crossover_constant_cosine(kRef, unordered), al::InputError);
}

TEST(SweepWsd, InteriorMinimaAndGrouping) {
  const std::vector<std::int64_t> totals{20000, 60000};
  const auto ratios = al::default_wsd_ratios();
  const auto r = al::sweep_wsd(kRef, totals, ratios);
  ASSERT_EQ(r.group_argmins.size(), 2u);
  for (std::size_t g = 0; g < 2; ++g) {
    const auto idx = r.group_argmins[g].index;
    EXPECT_GT(idx, g * ratios.size());
    EXPECT_LT(idx, (g + 1) * ratios.size() - 1);
    EXPECT_EQ(r.group_argmins[g].key["total_steps"].get<std::int64_t>(), totals[g]);
    // unimodal: decreasing to the argmin, increasing after
    for (std::size_t i = g * ratios.size() + 1; i < (g + 1) * ratios.size(); ++i) {
      if (i <= idx) EXPECT_LT(r.final_losses[i], r.final_losses[i - 1]);
      else EXPECT_GT(r.final_losses[i], r.final_losses[i - 1]);
    }
  }
}

TEST(SweepWsd, FullAnnealingIsCosine) {
  const std::vector<std::int64_t> totals{8000};
  const std::vector<double> ratios{1.0};
  const auto r = al::sweep_wsd(kRef, totals, ratios);
  EXPECT_NEAR(r.final_losses[0], al::final_loss(kRef, al::cosine_schedule(8000, 2e-4, 0.0, 500)), 1e-14);
}

TEST(SweepWsd, LongerMomentumFavoursLongerAnnealing) {
  std::vector<double> ratios;
  for (int k = 1; k <= 50; ++k) ratios.push_back(0.01 * k);
  const std::vector<std::int64_t> totals{60000};
  al::SweepContext fast;
  fast.lambda = 0.99;
  const auto slow_r = al::sweep_wsd(kRef, totals, ratios);
  const auto fast_r = al::sweep_wsd(kRef, totals, ratios, al::AnnealFn::cosine, fast);
  EXPECT_NEAR(ratios[slow_r.argmin_index], 0.18, 1e-12);
  EXPECT_NEAR(ratios[fast_r.argmin_index], 0.02, 1e-12);
}

TEST(CompareAnnealFns, ShortAndLongAnnealing) {
  const std::vector<double> ratios{0.1, 0.5};
  const std::vector<al::AnnealFn> fns{al::AnnealFn::cosine, al::AnnealFn::one_sqrt};
  const auto r = al::compare_anneal_fns(kRef, 50000, ratios, fns);
  // layout: fn-major
  EXPECT_LT(r.final_losses[2], r.final_losses[0]);
  EXPECT_LT(r.final_losses[1], r.final_losses[3]);
  EXPECT_NEAR(r.final_losses[2], 2.68089, 5e-6);
  EXPECT_NEAR(r.final_losses[0], 2.68187, 5e-6);
  ASSERT_EQ(r.group_argmins.size(), 2u);
  EXPECT_EQ(r.group_argmins[0].index, 2u);
  EXPECT_EQ(r.group_argmins[1].index, 1u);
  EXPECT_EQ(r.axis[2]["anneal_fn"], "one_sqrt");
}

TEST(Cpt, PeakOrderingAndStepInsensitivity) {
  const auto base = al::default_cpt_base(20000);
  const std::vector<double> peaks{1e-4, 2e-4, 4e-4};
  const std::vector<std::int64_t> steps{500};
  const auto by_peak = al::cpt_predict(kRef, base, peaks, steps, cpt_continuation());
  ASSERT_EQ(by_peak.size(), 3u);
  EXPECT_LT(by_peak[0].peak_loss, by_peak[1].peak_loss);
  EXPECT_LT(by_peak[1].peak_loss, by_peak[2].peak_loss);
  EXPECT_NEAR(by_peak[1].peak_loss, 2.868986317363082, 1e-9);

  const std::vector<double> one_peak{2e-4};
  const std::vector<std::int64_t> rewarm{100, 500, 2000};
  const auto by_steps = al::cpt_predict(kRef, base, one_peak, rewarm, cpt_continuation());
  const double expect[] = {2.653999479353785, 2.653980379620818, 2.6539088788435654};
  double lo = 1e9, hi = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(by_steps[i].final_loss, expect[i], 1e-9);
    lo = std::min(lo, by_steps[i].final_loss);
    hi = std::max(hi, by_steps[i].final_loss);
  }
  EXPECT_LT((hi - lo) / lo, 0.005);
}

TEST(Cpt, RewarmupShape) {
  const auto base = al::default_cpt_base(4000);
  const std::vector<double> peaks{2e-4};
  const std::vector<std::int64_t> steps{300};
  const auto c = al::cpt_predict(kRef, base, peaks, steps, al::cosine_schedule(3000, 2e-4, 0.0, 0))[0];
  ASSERT_EQ(c.loss.size(), 7000u);
  const auto b = al::predict(kRef, base);
  for (std::size_t i = 0; i < 4000; ++i) ASSERT_EQ(c.loss[i], b.loss[i]);
  EXPECT_NEAR(c.etas[4000 + 299], 2e-4, 1e-18);
  EXPECT_LT(c.s2[4000 + 299], c.s2[3999]);
  // per-step change: A (S1(s)^-alpha - S1(s-1)^-alpha) - C (S2(s) - S2(s-1))
  double s1 = b.areas.s1.back();
  for (std::size_t i = 4000; i < 4300; ++i) {
    const double next = s1 + c.etas[i];
    const double expect = kRef.A * (std::pow(next, -kRef.alpha) - std::pow(s1, -kRef.alpha)) - kRef.C * (c.s2[i] - c.s2[i - 1]);
    ASSERT_NEAR(c.loss[i] - c.loss[i - 1], expect, 1e-12) << i;
    s1 = next;
  }
}

TEST(Cpt, ZeroAmplitudeRewarmup) {
  const auto base = al::default_cpt_base(4000);
  const double start = al::materialize(base).etas.back();
  const std::vector<double> peaks{start};
  const std::vector<std::int64_t> steps{200};
  const auto cont = al::constant_schedule(2000, 2e-4, 0);
  const auto c = al::cpt_predict(kRef, base, peaks, steps, cont)[0];
  for (std::size_t i = 4000; i < c.etas.size(); ++i) ASSERT_EQ(c.etas[i], start);
  // no LR change: S2 and momentum carry over and only decay
  for (std::size_t i = 4000; i < c.s2.size(); ++i) ASSERT_GE(c.s2[i], c.s2[i - 1]);
}

TEST(Cpt, Errors) {
  const auto base = al::default_cpt_base(2000);
  const std::vector<double> too_high{5e-4}, ok{1e-4};
  const std::vector<std::int64_t> steps{100}, too_long{3000};
  const auto cont = al::cosine_schedule(3000, 4e-4, 0.0, 0);
  EXPECT_THROW(al::cpt_predict(kRef, base, too_high, steps, cont), al::InputError);
  EXPECT_THROW(al::cpt_predict(kRef, base, ok, too_long, cont), al::InputError);
  const std::vector<double> none;
  EXPECT_THROW(al::cpt_predict(kRef, base, none, steps, cont), al::InputError);
}

TEST(Reduction, Reproducible) {
  al::ReductionOptions o;
  const auto a = al::reduction_experiment(8, 42, o);
  const auto b = al::reduction_experiment(8, 42, o);
  const auto c = al::reduction_experiment(8, 43, o);
  ASSERT_EQ(a.records.size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(a.records[k].params, b.records[k].params);
    EXPECT_EQ(a.records[k].r2, b.records[k].r2);
  }
  EXPECT_NE(a.records[0].params, c.records[0].params);
  for (const auto& [fam, s] : a.per_lrs) {
    EXPECT_GE(s.mean_r2, 0.95) << fam;
    EXPECT_LE(s.mean_huber, 5e-4) << fam;
  }
  EXPECT_EQ(a.per_lrs.count("cosine"), 1u);
  EXPECT_EQ(a.per_lrs.count("wsd"), 1u);
}

TEST(Reduction, ConstantWithoutAnnealingIsExact) {
  al::ReductionOptions o;
  o.families = {al::ReductionFamily::constant};
  const std::vector<al::LawParams> tuples{{2.0, 0.4, 0.0, 0.5}};
  const auto r = al::reduction_from_tuples(tuples, o);
  EXPECT_GE(r.records[0].r2[0], 1.0 - 1e-9);
  EXPECT_EQ(r.per_lrs.at("constant").std_r2, 0.0);
}

TEST(Reduction, SamplingStaysInBox) {
  const auto ps = al::sample_params(500, 7);
  const al::ParamBox box;
  for (const auto& p : ps) {
    EXPECT_GE(p.L0, box.L0.lo);
    EXPECT_LT(p.L0, box.L0.hi);
    EXPECT_GE(p.alpha, box.alpha.lo);
    EXPECT_LT(p.alpha, box.alpha.hi);
  }
  al::ReductionOptions o;
  o.totals = {5000, 10000};
  EXPECT_THROW(al::reduction_experiment(1, 1, o), al::InputError);
  EXPECT_THROW(al::parse_reduction_family("linear"), al::InputError);
}

TEST(CostTable, Values) {
  const std::vector<double> ratios{0.2, 0.1};
  const auto rows = al::cost_table(100, ratios);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].total_steps, 5050.0);
  EXPECT_EQ(rows[1].total_steps, 1090.0);
  EXPECT_EQ(al::format_percent(rows[1].percent), "21.6%");
  EXPECT_EQ(rows[2].total_steps, 595.0);
  EXPECT_EQ(al::format_percent(rows[2].percent), "11.8%");
  EXPECT_EQ(rows[3].method, "Ours");
  EXPECT_EQ(al::format_percent(rows[3].percent), "0.99%");
  const std::vector<double> one{0.5};
  const auto single = al::cost_table(1, one);
  EXPECT_EQ(single[0].total_steps, 1.0);
  EXPECT_EQ(single[1].total_steps, 1.0);
  EXPECT_THROW(al::cost_table(0, one), al::InputError);
}

TEST(Export, SweepCsvAndJson) {
  const std::vector<std::int64_t> totals{3000};
  const std::vector<double> ratios{0.1, 0.2};
  const auto r = al::sweep_wsd(kRef, totals, ratios);
  std::ostringstream os;
  al::write_sweep_csv(os, r);
  std::istringstream is(os.str());
  std::string header, line;
  std::getline(is, header);
  EXPECT_EQ(header, "anneal_fn,ratio,total_steps,final_loss,is_argmin");
  int rows = 0, marked = 0;
  while (std::getline(is, line)) {
    ++rows;
    marked += line.back() == '1';
  }
  EXPECT_EQ(rows, 2);
  EXPECT_EQ(marked, 1);
  const auto j = al::to_json(r);
  EXPECT_EQ(j["kind"], "wsd");
  EXPECT_EQ(j["argmin"], r.axis[r.argmin_index]);
  EXPECT_EQ(j["group_argmins"].size(), 1u);
}

TEST(Export, CrossoverCptReductionCost) {
  const std::vector<std::int64_t> totals{2000, 4000};
  std::ostringstream a;
  al::write_crossover_csv(a, al::crossover_constant_cosine(kRef, totals));
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "total_steps,constant_final,cosine_final");

  const std::vector<double> peaks{1e-4};
  const std::vector<std::int64_t> steps{50};
  const auto curves = al::cpt_predict(kRef, al::default_cpt_base(1000), peaks, steps, al::cosine_schedule(500, 2e-4, 0.0, 0));
  std::ostringstream b;
  al::write_cpt_csv(b, curves);
  const auto bs = b.str();
  EXPECT_EQ(std::count(bs.begin(), bs.end(), '\n'), 1 + 1500);
  EXPECT_EQ(al::to_json(curves, false)[0].count("loss"), 0u);

  const auto rep = al::reduction_experiment(2, 5);
  const auto j = al::to_json(rep);
  EXPECT_EQ(j["n_tuples"], 2);
  std::ostringstream c;
  al::write_reduction_csv(c, rep);
  const auto cs = c.str();
  EXPECT_EQ(std::count(cs.begin(), cs.end(), '\n'), 1 + 2 * 2);

  const std::vector<double> ratios{0.2};
  EXPECT_EQ(al::to_json(al::cost_table(100, ratios))[1]["percent_text"], "21.6%");
}
