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

// Command-line front end. Every subcommand writes its outputs plus a
// `<out>.manifest.json` reproducibility record.
//
// Exit codes: 0 ok, 2 input error, 3 fit did not converge, 4 I/O failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anneal_law/anneal_law.hpp"
#include "anneal_law/service_http.hpp"

namespace al = anneal_law;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  const auto text = al::read_file(path);
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw al::InputError("not valid JSON", path);
  return j;
}

al::ScheduleSpec read_spec(const std::string& path) {
  try {
    return al::schedule_from_json(read_json(path));
  } catch (const al::InputError& e) {
    throw al::InputError(e.what(), path);
  }
}

/// `path` with its extension replaced.
std::string with_extension(const std::string& path, const std::string& ext) {
  return std::filesystem::path(path).replace_extension(ext).string();
}

void write_json(const std::string& path, const json& j) { al::write_file(path, j.dump(2) + "\n"); }

class Outputs {
 public:
  explicit Outputs(std::string command) { manifest_.command = std::move(command); }

  al::RunManifest& manifest() { return manifest_; }
  void input(const std::string& path) { manifest_.add_input(path); }

  void write(const std::string& path, const std::string& content) {
    al::write_file(path, content);
    manifest_.output_paths.push_back(path);
  }

  /// Writes the manifest next to the first output.
  void finish() {
    if (manifest_.output_paths.empty()) return;
    write_json(al::manifest_path_for(manifest_.output_paths.front()), al::to_json(manifest_));
  }

 private:
  al::RunManifest manifest_;
};

struct ParamsSource {
  std::string fit_path;
  std::vector<double> params;
  std::optional<double> lambda;

  void add_options(CLI::App* app) {
    app->add_option("--fit", fit_path, "Fit report (or params object) JSON");
    app->add_option("--params", params, "L0,A,C,alpha (default: reference tuple)")->delimiter(',')->expected(4);
    app->add_option("--lambda", lambda, "Decay factor (default: the fit's, else 0.999)");
  }

  /// Parameters and decay factor; records the fit file as an input.
  std::pair<al::LawParams, double> resolve(Outputs& out) const {
    al::LawParams p = al::reference_params();
    double lam = 0.999;
    if (!fit_path.empty()) {
      out.input(fit_path);
      const auto j = read_json(fit_path);
      if (j.is_object() && j.contains("L0")) {
        p = al::law_params_from_json(j);
      } else {
        const auto f = al::loaded_fit_from_json(j);
        p = f.params;
        lam = f.lambda;
      }
    } else if (!params.empty()) {
      p = {params[0], params[1], params[2], params[3]};
      p.validate();
    }
    if (lambda) lam = *lambda;
    al::AreaConfig{lam, 0.0}.validate();
    out.manifest().config_snapshot["params"] = al::to_json(p);
    out.manifest().config_snapshot["lambda"] = lam;
    return {p, lam};
  }
};

std::string csv_of(const auto& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-curve prediction from learning-rate schedules"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(al::kVersion));

  // schedule gen
  auto* schedule = app.add_subcommand("schedule", "Schedule utilities");
  schedule->require_subcommand(1);
  auto* gen = schedule->add_subcommand("gen", "Materialize a schedule spec to CSV (step,lr)");
  std::string spec_path, out_path;
  gen->add_option("--spec", spec_path, "Schedule spec JSON")->required();
  gen->add_option("--out", out_path, "Output CSV")->required();

  // areas
  auto* areas = app.add_subcommand("areas", "Compute S1 and S2 for a schedule");
  double lambda = 0.999, epsilon = 0.0;
  areas->add_option("--spec", spec_path, "Schedule spec JSON")->required();
  areas->add_option("--lambda", lambda, "Decay factor");
  areas->add_option("--epsilon", epsilon, "LR-weight exponent (0 disables)");
  areas->add_option("--out", out_path, "Output CSV")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the law to observed loss curves");
  std::vector<std::string> curve_paths, spec_paths, labels;
  std::string spec_a, spec_b, value_column = "loss", step_column = "step", format, variant = "base";
  std::optional<std::string> lr_column, tokens_column;
  std::optional<double> batch_size;
  std::vector<double> sizes;
  double delta = 1e-3;
  std::int64_t stride = 1, smooth = 1;
  int max_iterations = 1000;
  bool drop_warmup = false, extension = false;
  fit->add_option("--curves", curve_paths, "Loss logs (CSV or JSON lines)")->required();
  fit->add_option("--spec-a", spec_a, "Schedule of the first curve");
  fit->add_option("--spec-b", spec_b, "Schedule of the second curve");
  fit->add_option("--specs", spec_paths, "Schedules, one per curve");
  fit->add_option("--labels", labels, "Curve labels");
  fit->add_option("--delta", delta, "Huber threshold");
  fit->add_option("--lambda", lambda, "Decay factor");
  fit->add_option("--epsilon", epsilon, "LR-weight exponent (lr_weighted variant)");
  fit->add_option("--variant", variant, "base | lr_weighted | zeta");
  fit->add_flag("--extension", extension, "Fit the model-size extension (needs --n)");
  fit->add_option("--n", sizes, "Model size per curve");
  fit->add_option("--max-iterations", max_iterations, "L-BFGS iterations per start");
  fit->add_option("--format", format, "csv | json_lines (default: by extension)");
  fit->add_option("--value-column", value_column, "Loss column name");
  fit->add_option("--step-column", step_column, "Step column name (empty: derive from tokens)");
  fit->add_option("--lr-column", lr_column, "LR column name");
  fit->add_option("--tokens-column", tokens_column, "Tokens column name");
  fit->add_option("--batch-size-tokens", batch_size, "Tokens per step");
  fit->add_option("--stride", stride, "Keep every k-th sample");
  fit->add_option("--smooth", smooth, "Centered moving-average window (odd)");
  fit->add_flag("--drop-warmup", drop_warmup, "Exclude warmup-step samples");
  fit->add_option("--out", out_path, "Output fit report JSON")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Predict a loss curve for a schedule");
  ParamsSource predict_params;
  predict_params.add_options(predict);
  std::string observed_path;
  std::optional<double> model_size;
  predict->add_option("--spec", spec_path, "Target schedule spec JSON")->required();
  predict->add_option("--observed", observed_path, "Observed loss log for metrics");
  predict->add_option("--n", model_size, "Model size (extended fits)");
  predict->add_option("--value-column", value_column, "Loss column of the observed log");
  predict->add_option("--out", out_path, "Output CSV (step,lr,s1,s2,loss)")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Schedule studies");
  sweep->require_subcommand(1);
  ParamsSource sweep_params;
  double eta_max = 2e-4;
  std::int64_t warmup = 500, total = 0;
  std::vector<std::int64_t> totals, rewarm_steps;
  std::vector<double> factors = al::default_cycle_factors(), fracs = al::default_min_lr_fracs(),
                      ratios = al::default_wsd_ratios(), peaks;
  std::vector<std::string> fns{"cosine", "linear", "one_sqrt", "one_square"};
  std::string anneal_fn = "cosine", csv_path, base_spec_path, continuation_path;
  std::int64_t base_steps = 20000;
  bool keep_curves = false;
  auto sweep_common = [&](CLI::App* s) {
    sweep_params.add_options(s);
    s->add_option("--eta-max", eta_max, "Peak LR");
    s->add_option("--warmup", warmup, "Warmup steps");
    s->add_option("--out", out_path, "Output JSON")->required();
    s->add_option("--csv", csv_path, "CSV mirror (default: --out with .csv)");
  };
  auto* sw_cos = sweep->add_subcommand("cosine", "Cosine cycle length x min LR");
  sweep_common(sw_cos);
  sw_cos->add_option("--total", total, "Total steps")->required();
  sw_cos->add_option("--cycle-factors", factors, "T / total")->delimiter(',');
  sw_cos->add_option("--min-lr-fracs", fracs, "eta_min / eta_max")->delimiter(',');
  sw_cos->add_flag("--curves", keep_curves, "Include full curves");
  auto* sw_wsd = sweep->add_subcommand("wsd", "WSD annealing ratio");
  sweep_common(sw_wsd);
  sw_wsd->add_option("--totals", totals, "Total steps")->delimiter(',')->required();
  sw_wsd->add_option("--ratios", ratios, "Annealing ratios")->delimiter(',');
  sw_wsd->add_option("--anneal-fn", anneal_fn, "Annealing function");
  sw_wsd->add_flag("--curves", keep_curves, "Include full curves");
  auto* sw_fn = sweep->add_subcommand("anneal-fn", "Annealing function x ratio");
  sweep_common(sw_fn);
  sw_fn->add_option("--total", total, "Total steps")->required();
  sw_fn->add_option("--ratios", ratios, "Annealing ratios")->delimiter(',');
  sw_fn->add_option("--fns", fns, "Annealing functions")->delimiter(',');
  sw_fn->add_flag("--curves", keep_curves, "Include full curves");
  auto* sw_cross = sweep->add_subcommand("crossover", "Constant vs cosine over totals");
  sweep_common(sw_cross);
  sw_cross->add_option("--totals", totals, "Total steps (increasing)")->delimiter(',')->required();
  auto* sw_cpt = sweep->add_subcommand("cpt", "Continual pre-training re-warmup");
  sweep_common(sw_cpt);
  sw_cpt->add_option("--base-steps", base_steps, "Base run: cosine to 0.1*eta_max over this many steps");
  sw_cpt->add_option("--base-spec", base_spec_path, "Base run schedule (overrides --base-steps)");
  sw_cpt->add_option("--peaks", peaks, "Re-warmup peak LRs")->delimiter(',')->required();
  sw_cpt->add_option("--rewarm-steps", rewarm_steps, "Re-warmup lengths")->delimiter(',')->required();
  sw_cpt->add_option("--continuation", continuation_path, "Continuation schedule spec")->required();

  // reduce
  auto* reduce = app.add_subcommand("reduce", "Endpoint power-law reduction experiment");
  std::size_t n_tuples = 1000;
  std::uint64_t seed = 42;
  std::vector<std::string> families{"cosine", "wsd"};
  al::ReductionOptions red_opts;
  reduce->add_option("--n", n_tuples, "Parameter tuples");
  reduce->add_option("--seed", seed, "RNG seed");
  reduce->add_option("--families", families, "constant, cosine, wsd")->delimiter(',');
  reduce->add_option("--totals", red_opts.totals, "Total steps")->delimiter(',');
  reduce->add_option("--lambda", red_opts.lambda, "Decay factor");
  reduce->add_option("--wsd-ratio", red_opts.wsd_ratio, "WSD annealing ratio");
  reduce->add_option("--out", out_path, "Output JSON")->required();
  reduce->add_option("--csv", csv_path, "Per-tuple CSV (default: --out with .csv)");

  // cost-table
  auto* cost = app.add_subcommand("cost-table", "Fitting cost comparison");
  std::int64_t points = 100;
  std::vector<double> cost_ratios{0.2, 0.1};
  std::optional<double> ours_steps;
  cost->add_option("--points", points, "Endpoints P");
  cost->add_option("--ratios", cost_ratios, "WSD annealing ratios")->delimiter(',');
  cost->add_option("--ours-steps", ours_steps, "Steps of the single run, in units of K (default P/2)");
  cost->add_option("--out", out_path, "Optional JSON output");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the JSON API");
  int port = 8080;
  std::string host = "127.0.0.1", ui_dir;
  std::vector<std::string> fit_paths;
  serve->add_option("--port", port, "Port");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--fit", fit_paths, "Fit reports to load (id = file stem)");
  serve->add_option("--lambda", lambda, "Default decay factor");
  serve->add_option("--ui-dir", ui_dir, "Static UI assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      Outputs out("schedule gen");
      out.input(spec_path);
      const auto spec = read_spec(spec_path);
      out.manifest().config_snapshot = {{"spec", al::to_json(spec)}};
      out.write(out_path, csv_of([&](std::ostream& os) { al::write_lr_csv(os, al::materialize(spec)); }));
      out.finish();
    } else if (areas->parsed()) {
      Outputs out("areas");
      out.input(spec_path);
      const auto spec = read_spec(spec_path);
      const al::AreaConfig cfg{lambda, epsilon};
      const auto series = al::materialize(spec);
      const auto a = al::compute_areas(series, cfg);
      out.manifest().config_snapshot = {{"spec", al::to_json(spec)}, {"lambda", lambda}, {"epsilon", epsilon}};
      out.write(out_path, csv_of([&](std::ostream& os) { al::write_areas_csv(os, series, a); }));
      out.finish();
    } else if (fit->parsed()) {
      Outputs out("fit");
      std::vector<std::string> specs = spec_paths;
      if (specs.empty()) {
        if (!spec_a.empty()) specs.push_back(spec_a);
        if (!spec_b.empty()) specs.push_back(spec_b);
      }
      if (specs.size() != curve_paths.size())
        throw al::InputError("need one schedule spec per curve (" + std::to_string(curve_paths.size()) + " curves, " +
                                 std::to_string(specs.size()) + " specs)",
                             "specs");
      if (!sizes.empty() && sizes.size() != curve_paths.size())
        throw al::InputError("need one model size per curve", "n");
      std::vector<al::LossCurve> curves;
      for (std::size_t i = 0; i < curve_paths.size(); ++i) {
        out.input(curve_paths[i]);
        out.input(specs[i]);
        al::ParseOptions po;
        po.format = format.empty() ? al::guess_log_format(curve_paths[i]) : al::parse_log_format(format);
        po.columns.step = step_column;
        po.columns.value = value_column;
        po.columns.lr = lr_column;
        po.columns.tokens = tokens_column;
        po.batch_size_tokens = batch_size;
        const auto log = al::parse_log_file(curve_paths[i], po);
        al::CurveOptions co;
        co.stride = 1;
        co.smooth_window = smooth;
        co.drop_warmup = drop_warmup;
        co.label = i < labels.size() ? labels[i] : std::filesystem::path(curve_paths[i]).stem().string();
        if (!sizes.empty()) co.n = sizes[i];
        curves.push_back(al::to_loss_curve(log, read_spec(specs[i]), co));
      }
      al::FitConfig cfg;
      cfg.delta = delta;
      cfg.lambda = lambda;
      cfg.max_iterations = max_iterations;
      cfg.fit_extension = extension;
      cfg.variant = al::parse_fit_variant(variant);
      cfg.epsilon = epsilon;
      cfg.stride = stride;
      out.manifest().config_snapshot = al::to_json(cfg);
      try {
        const auto report = al::fit(curves, cfg);
        out.write(out_path, al::to_json(report).dump(2) + "\n");
        out.finish();
        std::cout << al::to_json(report.params).dump() << "\n";
      } catch (const al::FitConvergenceError& e) {
        out.write(out_path, al::to_json(e.best_so_far()).dump(2) + "\n");
        out.finish();
        throw;
      }
    } else if (predict->parsed()) {
      Outputs out("predict");
      const auto [params, lam] = predict_params.resolve(out);
      out.input(spec_path);
      const auto spec = read_spec(spec_path);
      out.manifest().config_snapshot["spec"] = al::to_json(spec);
      const auto p = al::predict(params, spec, {lam, 0.0}, model_size);
      out.write(out_path, csv_of([&](std::ostream& os) {
                  os << "step,lr,s1,s2,loss\n";
                  for (std::size_t i = 0; i < p.loss.size(); ++i)
                    os << (i + 1) << ',' << al::detail::format_double(p.series.etas[i]) << ','
                       << al::detail::format_double(p.areas.s1[i]) << ',' << al::detail::format_double(p.areas.s2[i])
                       << ',' << al::detail::format_double(p.loss[i]) << '\n';
                }));
      if (!observed_path.empty()) {
        out.input(observed_path);
        al::ParseOptions po;
        po.format = al::guess_log_format(observed_path);
        po.columns.value = value_column;
        const auto log = al::parse_log_file(observed_path, po);
        const auto curve = al::to_loss_curve(log, spec);
        const auto m = al::metrics(p.loss, curve);
        const json mj{{"r_squared", m.r_squared ? json(*m.r_squared) : json(nullptr)},
                      {"mean_rel_error", m.mean_rel_error},
                      {"samples", curve.samples.size()}};
        out.write(with_extension(out_path, ".metrics.json"), mj.dump(2) + "\n");
        std::cout << mj.dump() << "\n";
      }
      out.finish();
    } else if (sweep->parsed()) {
      Outputs out("sweep " + sweep->get_subcommands().front()->get_name());
      const auto [params, lam] = sweep_params.resolve(out);
      al::SweepContext ctx{eta_max, warmup, lam, keep_curves};
      auto& snap = out.manifest().config_snapshot;
      snap["eta_max"] = eta_max;
      snap["warmup_steps"] = warmup;
      const std::string csv = csv_path.empty() ? with_extension(out_path, ".csv") : csv_path;
      if (sw_cos->parsed()) {
        snap["total"] = total;
        snap["cycle_factors"] = factors;
        snap["min_lr_fracs"] = fracs;
        const auto r = al::sweep_cosine(params, total, factors, fracs, ctx);
        out.write(out_path, al::to_json(r).dump(2) + "\n");
        out.write(csv, csv_of([&](std::ostream& os) { al::write_sweep_csv(os, r); }));
      } else if (sw_wsd->parsed()) {
        snap["totals"] = totals;
        snap["ratios"] = ratios;
        snap["anneal_fn"] = anneal_fn;
        const auto r = al::sweep_wsd(params, totals, ratios, al::parse_anneal_fn(anneal_fn), ctx);
        out.write(out_path, al::to_json(r).dump(2) + "\n");
        out.write(csv, csv_of([&](std::ostream& os) { al::write_sweep_csv(os, r); }));
      } else if (sw_fn->parsed()) {
        std::vector<al::AnnealFn> parsed;
        for (const auto& f : fns) parsed.push_back(al::parse_anneal_fn(f));
        snap["total"] = total;
        snap["ratios"] = ratios;
        snap["fns"] = fns;
        const auto r = al::compare_anneal_fns(params, total, ratios, parsed, ctx);
        out.write(out_path, al::to_json(r).dump(2) + "\n");
        out.write(csv, csv_of([&](std::ostream& os) { al::write_sweep_csv(os, r); }));
      } else if (sw_cross->parsed()) {
        snap["totals"] = totals;
        const auto r = al::crossover_constant_cosine(params, totals, ctx);
        out.write(out_path, al::to_json(r).dump(2) + "\n");
        out.write(csv, csv_of([&](std::ostream& os) { al::write_crossover_csv(os, r); }));
      } else {
        al::ScheduleSpec base;
        if (!base_spec_path.empty()) {
          out.input(base_spec_path);
          base = read_spec(base_spec_path);
        } else {
          base = al::default_cpt_base(base_steps, ctx);
        }
        out.input(continuation_path);
        const auto cont = read_spec(continuation_path);
        snap["base"] = al::to_json(base);
        snap["continuation"] = al::to_json(cont);
        snap["peaks"] = peaks;
        snap["rewarm_steps"] = rewarm_steps;
        const auto curves = al::cpt_predict(params, base, peaks, rewarm_steps, cont, lam);
        out.write(out_path, al::to_json(curves, false).dump(2) + "\n");
        out.write(csv, csv_of([&](std::ostream& os) { al::write_cpt_csv(os, curves); }));
      }
      out.finish();
    } else if (reduce->parsed()) {
      Outputs out("reduce");
      red_opts.families.clear();
      for (const auto& f : families) red_opts.families.push_back(al::parse_reduction_family(f));
      const auto rep = al::reduction_experiment(n_tuples, seed, red_opts);
      const auto j = al::to_json(rep);
      out.manifest().config_snapshot = j;
      out.manifest().config_snapshot.erase("per_lrs");
      out.write(out_path, j.dump(2) + "\n");
      out.write(csv_path.empty() ? with_extension(out_path, ".csv") : csv_path,
                csv_of([&](std::ostream& os) { al::write_reduction_csv(os, rep); }));
      out.finish();
      for (const auto& [name, s] : rep.per_lrs)
        std::cout << name << ": mean R2 " << s.mean_r2 << ", std R2 " << s.std_r2 << ", mean Huber " << s.mean_huber
                  << "\n";
    } else if (cost->parsed()) {
      const auto rows = al::cost_table(points, cost_ratios, ours_steps);
      std::cout << "method,lrs,total_steps,percent\n";
      for (const auto& r : rows)
        std::cout << r.method << ',' << r.lrs << ',' << al::detail::format_double(r.total_steps) << "K,"
                  << al::format_percent(r.percent) << '\n';
      if (!out_path.empty()) {
        Outputs out("cost-table");
        out.manifest().config_snapshot = {{"points", points}, {"ratios", cost_ratios}};
        out.write(out_path, al::to_json(rows).dump(2) + "\n");
        out.finish();
      }
    } else if (serve->parsed()) {
      al::ApiSession session(lambda);
      for (const auto& path : fit_paths) {
        const auto f = al::loaded_fit_from_json(read_json(path));
        session.add_fit(f.params, std::filesystem::path(path).stem().string(), f.lambda, path);
      }
      httplib::Server server;
      al::mount(server, session, ui_dir.empty() ? std::nullopt : std::optional<std::string>(ui_dir));
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) throw al::IoError("cannot bind " + host + ":" + std::to_string(port));
    }
  } catch (const al::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
