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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"

namespace al = anneal_law;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("anneal_law_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Runs the CLI; returns its exit status and stores stdout.
  int run(const std::string& args) {
    const auto out = path("stdout.txt");
    const std::string cmd = std::string(ANNEAL_LAW_CLI) + " " + args + " > " + out + " 2> " + path("stderr.txt");
    const int rc = std::system(cmd.c_str());
    stdout_ = al::read_file(out);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string write_spec(const std::string& name, const al::ScheduleSpec& s) {
    al::write_file(path(name), al::to_json(s).dump());
    return path(name);
  }

  std::string write_log(const std::string& name, const al::LossCurve& c) {
    std::ostringstream os;
    os << "step,loss\n";
    for (const auto& s : c.samples) os << s.step << ',' << al::detail::format_double(s.loss) << '\n';
    al::write_file(path(name), os.str());
    return path(name);
  }

  fs::path dir_;
  std::string stdout_;
};

}  // namespace

TEST_F(Cli, CostTable) {
  ASSERT_EQ(run("cost-table --points 100 --ratios 0.2,0.1"), 0);
  EXPECT_NE(stdout_.find("method,lrs,total_steps,percent\n"), std::string::npos);
  EXPECT_NE(stdout_.find("Chinchilla,cosine,5050K,100.0%"), std::string::npos);
  EXPECT_NE(stdout_.find("Chinchilla,wsd(0.2),1090K,21.6%"), std::string::npos);
  EXPECT_NE(stdout_.find("Chinchilla,wsd(0.1),595K,11.8%"), std::string::npos);
}

TEST_F(Cli, ScheduleAndAreas) {
  const auto spec = write_spec("const.json", al::constant_schedule(200, 2e-4, 10));
  ASSERT_EQ(run("schedule gen --spec " + spec + " --out " + path("lr.csv")), 0);
  EXPECT_EQ(al::read_file(path("lr.csv")).substr(0, 8), "step,lr\n");
  ASSERT_EQ(run("areas --spec " + spec + " --out " + path("areas.csv")), 0);
  std::istringstream in(al::read_file(path("areas.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,lr,s1,s2,momentum");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto c3 = line.find(',', line.find(',', line.find(',') + 1) + 1);
    EXPECT_EQ(line.substr(c3 + 1), "0,0");
  }
  EXPECT_EQ(rows, 200);
  EXPECT_TRUE(fs::exists(path("areas.csv.manifest.json")));
}

TEST_F(Cli, PredictReproducesSyntheticCurve) {
  const auto s = al::wsd_schedule(3000, 2e-4, 0.0, 0.2, al::AnnealFn::cosine, 100);
  const auto spec = write_spec("wsd.json", s);
  const auto obs = write_log("obs.csv", fixtures::synthetic_curve(al::reference_params(), s, 0.0, 1, 7));
  ASSERT_EQ(run("predict --spec " + spec + " --observed " + obs + " --out " + path("pred.csv")), 0);
  const auto m = json::parse(al::read_file(path("pred.metrics.json")));
  EXPECT_LE(m["mean_rel_error"].get<double>(), 1e-9);
  EXPECT_EQ(json::parse(stdout_)["samples"], 428);
  EXPECT_EQ(al::read_file(path("pred.csv")).substr(0, 18), "step,lr,s1,s2,loss");

  const auto manifest = al::read_file(path("pred.csv.manifest.json"));
  ASSERT_EQ(run("predict --spec " + spec + " --observed " + obs + " --out " + path("pred.csv")), 0);
  EXPECT_EQ(al::read_file(path("pred.csv.manifest.json")), manifest);
  const auto mj = json::parse(manifest);
  EXPECT_EQ(mj["command"], "predict");
  EXPECT_EQ(mj["input_hashes"].size(), 2u);
  EXPECT_EQ(mj["tool_version"], al::kVersion);
}

TEST_F(Cli, FitThenPredictWithReport) {
  std::string logs, specs;
  int k = 0;
  for (const auto& s : fixtures::training_specs(6000)) {
    logs += write_log("c" + std::to_string(k) + ".csv", fixtures::synthetic_curve(al::reference_params(), s, 0.0, 1, 10)) + " ";
    specs += write_spec("s" + std::to_string(k) + ".json", s) + " ";
    ++k;
  }
  ASSERT_EQ(run("fit --curves " + logs + "--specs " + specs + "--out " + path("fit.json")), 0);
  const auto report = json::parse(al::read_file(path("fit.json")));
  EXPECT_TRUE(report["converged"].get<bool>());
  EXPECT_NEAR(report["params"]["alpha"].get<double>(), 0.55, 0.55 * 0.005);
  EXPECT_TRUE(fs::exists(path("fit.json.manifest.json")));

  const auto target = write_spec("t.json", al::cosine_schedule(8000, 2e-4, 0.0, 500));
  ASSERT_EQ(run("predict --fit " + path("fit.json") + " --spec " + target + " --out " + path("p.csv")), 0);
  EXPECT_TRUE(fs::exists(path("p.csv")));
}

TEST_F(Cli, FitNonConvergenceExitsThree) {
  const auto s = al::cosine_schedule(3000, 2e-4, 0.0, 100);
  const auto log = write_log("c.csv", fixtures::synthetic_curve(al::reference_params(), s, 0.01, 3, 10));
  const auto spec = write_spec("s.json", s);
  EXPECT_EQ(run("fit --curves " + log + " --specs " + spec + " --max-iterations 1 --out " + path("fit.json")), 3);
  EXPECT_FALSE(json::parse(al::read_file(path("fit.json")))["converged"].get<bool>());
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("areas --out x.csv"), 2);
  EXPECT_EQ(run("areas --spec " + path("missing.json") + " --out " + path("a.csv")), 4);
  al::write_file(path("bad.json"), "{\"kind\": \"cosine\", \"total_steps\": -1}");
  EXPECT_EQ(run("areas --spec " + path("bad.json") + " --out " + path("a.csv")), 2);
  const auto spec = write_spec("ok.json", al::constant_schedule(10, 2e-4));
  EXPECT_EQ(run("areas --spec " + spec + " --out " + path("no/such/dir/a.csv")), 4);
}

TEST_F(Cli, Sweeps) {
  ASSERT_EQ(run("sweep wsd --totals 5000,10000 --ratios 0.1,0.2,0.3 --out " + path("wsd.json")), 0);
  const auto j = json::parse(al::read_file(path("wsd.json")));
  EXPECT_EQ(j["final_losses"].size(), 6u);
  EXPECT_TRUE(fs::exists(path("wsd.csv")));
  ASSERT_EQ(run("sweep cosine --total 5000 --out " + path("cos.json")), 0);
  ASSERT_EQ(run("sweep anneal-fn --total 5000 --ratios 0.1 --fns cosine,one_sqrt --out " + path("fn.json")), 0);
  ASSERT_EQ(run("sweep crossover --totals 5000,50000 --out " + path("x.json")), 0);
  EXPECT_EQ(json::parse(al::read_file(path("x.json")))["crossover_total"], 50000);
  const auto cont = write_spec("cont.json", al::cosine_schedule(2000, 4e-4, 0.0, 0));
  ASSERT_EQ(run("sweep cpt --base-steps 2000 --peaks 1e-4,2e-4 --rewarm-steps 100 --continuation " + cont + " --out " +
                path("cpt.json")),
            0);
  EXPECT_EQ(json::parse(al::read_file(path("cpt.json"))).size(), 2u);
  EXPECT_EQ(run("sweep wsd --totals 5000 --ratios 1.5 --out " + path("bad.json")), 2);
}

TEST_F(Cli, Reduce) {
  ASSERT_EQ(run("reduce --n 3 --seed 1 --out " + path("r.json")), 0);
  const auto j = json::parse(al::read_file(path("r.json")));
  EXPECT_EQ(j["n_tuples"], 3);
  EXPECT_GE(j["per_lrs"]["cosine"]["mean_r2"].get<double>(), 0.95);
  const auto first = al::read_file(path("r.csv"));
  ASSERT_EQ(run("reduce --n 3 --seed 1 --out " + path("r.json")), 0);
  EXPECT_EQ(al::read_file(path("r.csv")), first);
}
