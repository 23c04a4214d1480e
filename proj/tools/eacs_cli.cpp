/*
 * Copyright 2026 The EACS Authors
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

// eacs: command-line front end for environment-adaptive covariate selection.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eacs/analytic.hpp"
#include "eacs/baselines.hpp"
#include "eacs/config.hpp"
#include "eacs/csv.hpp"
#include "eacs/env_data.hpp"
#include "eacs/error.hpp"
#include "eacs/experiment.hpp"
#include "eacs/gating.hpp"
#include "eacs/risk.hpp"
#include "eacs/selector.hpp"
#include "eacs/serialize.hpp"
#include "eacs/subsets.hpp"
#include "eacs/summaries.hpp"

namespace fs = std::filesystem;
using namespace eacs;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out;
};

struct DataOptions {
  std::string path;
  std::string env_column = "env_id";
  std::string outcome_column = "y";
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.path,
                  "Multi-environment CSV; generated from the [dgp] settings when omitted");
  cmd->add_option("--env-column", d.env_column, "Environment id column")->capture_default_str();
  cmd->add_option("--outcome-column", d.outcome_column, "Outcome column")->capture_default_str();
}

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) cfg.run.base_seed = *g.seed;
  if (!g.out.empty()) cfg.run.output_dir = g.out;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.run.output_dir);
  fs::create_directories(dir);
  return dir;
}

GridSpec train_grid(const ExperimentConfig& cfg) {
  GridSpec g;
  g.levels = LevelSampling{cfg.dgp.max_level, cfg.dgp.level_grid};
  g.per_type_count = cfg.dgp.envs_per_type;
  g.n = cfg.dgp.samples;
  return g;
}

MultiEnvData load_or_generate(const DataOptions& d, const ExperimentConfig& cfg,
                              StreamRole role = StreamRole::kTrain) {
  if (!d.path.empty()) {
    return load_multi_env_csv(d.path, d.env_column,
                              d.outcome_column.empty() ? std::nullopt
                                                       : std::optional<std::string>(d.outcome_column));
  }
  GridSpec g = train_grid(cfg);
  double sd = cfg.dgp.sigma;
  if (role == StreamRole::kTest) {
    g.per_type_count = cfg.dgp.test_envs_per_type;
    g.n = cfg.dgp.test_samples;
    sd = cfg.dgp.sigma_test;
  }
  return generate_environment_grid(g, sd, cfg.run.base_seed, 0, role);
}

void write_risk_report(const fs::path& path, const MultiEnvData& data,
                       const LinearPredictor& predictor) {
  std::ofstream out(path, std::ios::binary);
  CsvWriter w(out);
  w.row({"env_id", "mse"});
  for (const auto& env : data.environments()) {
    w.field(env.env_id).field(empirical_risk(env, predictor));
    w.end_row();
  }
}

int cmd_generate(const Globals& g, const std::string& role_name) {
  const ExperimentConfig cfg = resolve_config(g);
  const StreamRole role = role_name == "test" ? StreamRole::kTest : StreamRole::kTrain;
  const MultiEnvData data = load_or_generate(DataOptions{}, cfg, role);
  const fs::path path = out_dir(cfg) / (role_name + ".csv");
  write_multi_env_csv(path.string(), data);
  save_config(out_dir(cfg) / "config.resolved.ini", cfg);
  std::cout << "wrote " << data.size() << " environments to " << path.string() << "\n";
  return 0;
}

int cmd_fit_baselines(const Globals& g, const DataOptions& d, const std::string& method,
                      std::optional<double> value) {
  const ExperimentConfig cfg = resolve_config(g);
  const MultiEnvData data = load_or_generate(d, cfg);
  const fs::path dir = out_dir(cfg);
  auto fit_one = [&](const std::string& name) {
    LinearPredictor p;
    double used = 0.0;
    if (name == "ols") {
      p = fit_pooled_ols(data, SubsetMask::all(static_cast<std::size_t>(data.num_covariates())));
    } else {
      const TuneMethod m = parse_tune_method(name);
      const auto& grid = m == TuneMethod::kLasso    ? cfg.baselines.lasso_grid
                         : m == TuneMethod::kAnchor ? cfg.baselines.anchor_grid
                                                    : cfg.baselines.icp_grid;
      used = value ? *value : tune_inner_cv(m, data, grid, cfg.baselines.folds).chosen;
      if (m == TuneMethod::kLasso) {
        p = fit_lasso(data, LassoConfig{used});
      } else if (m == TuneMethod::kAnchor) {
        p = fit_anchor(data, AnchorConfig{used});
      } else {
        IcpConfig icp;
        icp.alpha_threshold = used;
        const IcpResult r =
            icp_run(data, build_library(static_cast<std::size_t>(data.num_covariates())), icp);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        p = fit_pooled_ols(data, r.selected);
      }
    }
    write_text_file(dir / (name + ".json"), to_json(p));
    write_risk_report(dir / (name + "_risk.csv"), data, p);
    std::cout << name;
    if (name != "ols") std::cout << " (" << format_double(used) << ")";
    std::cout << ": mask " << p.mask.label(data.covariate_names()) << "\n";
  };
  if (method == "all") {
    for (const char* m : {"ols", "lasso", "anchor", "icp"}) fit_one(m);
  } else {
    fit_one(method);
  }
  return 0;
}

int cmd_train_selector(const Globals& g, const DataOptions& d, const std::string& heldout_path) {
  const ExperimentConfig cfg = resolve_config(g);
  const MultiEnvData data = load_or_generate(d, cfg);
  const auto p = static_cast<std::size_t>(data.num_covariates());
  const std::vector<int> constraint =
      cfg.selector.run_constrained ? cfg.selector.constraint : std::vector<int>{};
  const SubsetLibrary library = build_library(p, constraint);
  const auto predictors = fit_library(data, library);
  const RiskTable table = build_risk_table(data, library, predictors);
  const auto summaries = summarize_all(data, cfg.selector.summary);
  SelectorTrainConfig train = cfg.selector.train;
  const SelectorModel model =
      train_selector(summaries, table.labels, library, train, cfg.selector.summary);

  const fs::path dir = out_dir(cfg);
  write_text_file(dir / "selector.json", to_json(model));
  for (std::size_t k = 0; k < predictors.size(); ++k) {
    write_text_file(dir / ("predictor_" + library[k].bit_string() + ".json"),
                    to_json(predictors[k]));
  }
  write_risk_table_csv((dir / "risk_table.csv").string(), table, data.covariate_names());
  write_summaries_csv((dir / "summaries.csv").string(), table.env_ids, summaries);
  std::cout << "selector trained on " << data.size() << " environments, final loss "
            << format_double(model.final_loss) << "\n";

  if (!heldout_path.empty() || d.path.empty()) {
    const MultiEnvData heldout =
        heldout_path.empty()
            ? load_or_generate(DataOptions{}, cfg, StreamRole::kTest)
            : load_multi_env_csv(heldout_path, d.env_column, d.outcome_column);
    const FallbackDecision dec = fallback_guard(model, predictors, heldout, table);
    std::cout << "fallback guard: "
              << (dec.use_adaptive ? std::string("adaptive")
                                   : "fixed " + dec.fixed_mask.label(data.covariate_names()))
              << " (adaptive " << format_double(dec.adaptive_risk) << ", fixed "
              << format_double(dec.fixed_risk) << ")\n";
  }
  return 0;
}

int cmd_train_gate(const Globals& g, const DataOptions& d, GateTrainConfig gate) {
  const ExperimentConfig cfg = resolve_config(g);
  const MultiEnvData data = load_or_generate(d, cfg);
  const auto summaries = summarize_all(data, cfg.selector.summary);
  gate.seed = cfg.run.base_seed;
  const GateModel model = train_soft_gating(data, summaries, gate, cfg.selector.summary);
  const fs::path dir = out_dir(cfg);
  write_text_file(dir / "gate.json", to_json(model));
  write_gates_csv((dir / "gates.csv").string(), model, data, summaries);
  std::cout << "gate trained: loss " << format_double(model.loss_trace.front()) << " -> "
            << format_double(model.loss_trace.back()) << " over " << model.loss_trace.size() - 1
            << " accepted steps\n";
  return 0;
}

int cmd_analytic(const Globals& g, std::optional<double> beta3) {
  const ExperimentConfig cfg = resolve_config(g);
  const double b3 = beta3 ? *beta3 : pooled_coefficients_closed_form().beta3;
  const fs::path path = out_dir(cfg) / "analytic_rule.csv";
  std::ofstream out(path, std::ios::binary);
  CsvWriter w(out);
  w.row({"delta", "type", "beta3", "s2", "s3", "r", "delta_risk", "preferred"});
  for (auto type : kGridTargets) {
    for (double delta : cfg.crossover.deltas) {
      const AnalyticRuleParams a = analytic_params(PerturbationSpec{type, delta}, b3);
      w.field(delta).field(to_string(type)).field(b3).field(a.s2).field(a.s3).field(a.r);
      w.field(risk_difference(a)).field(to_string(preferred_subset(a)));
      w.end_row();
    }
  }
  const VarianceThreshold t = variance_threshold(b3);
  std::cout << "beta3 = " << format_double(b3) << ", threshold s3^2 - s2^2 > "
            << (t.defined ? format_double(t.value) : std::string("undefined")) << "\n"
            << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_sweep(const Globals& g, std::optional<int> replications) {
  ExperimentConfig cfg = resolve_config(g);
  if (replications) cfg.run.replications = *replications;
  const MetricReport report = run_sweep(cfg);
  int failures = 0;
  for (const auto& c : report.cells) {
    if (c.error) {
      ++failures;
      std::cerr << "cell " << c.spec.condition << "/" << c.spec.level << " failed: " << *c.error
                << "\n";
    }
  }
  std::cout << "sweep: " << report.cells.size() << " cells, " << failures << " failed; outputs in "
            << cfg.run.output_dir << "\n";
  return failures == 0 ? 0 : 2;
}

int cmd_crossover(const Globals& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const auto rows = run_crossover(cfg);
  for (auto type : kGridTargets) {
    const auto x = crossing_point(rows, type);
    std::cout << to_string(type) << ": "
              << (x ? "curves cross at delta ~ " + format_double(*x) : std::string("no crossing"))
              << "\n";
  }
  return 0;
}

int cmd_tune(const Globals& g, const DataOptions& d, const std::string& method) {
  const ExperimentConfig cfg = resolve_config(g);
  const MultiEnvData data = load_or_generate(d, cfg);
  const TuneMethod m = parse_tune_method(method);
  const auto& grid = m == TuneMethod::kLasso    ? cfg.baselines.lasso_grid
                     : m == TuneMethod::kAnchor ? cfg.baselines.anchor_grid
                                                : cfg.baselines.icp_grid;
  const TuneResult r = tune_inner_cv(m, data, grid, cfg.baselines.folds);
  const fs::path path = out_dir(cfg) / ("tune_" + method + ".csv");
  std::ofstream out(path, std::ios::binary);
  CsvWriter w(out);
  w.row({"value", "cv_mse", "chosen"});
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    w.field(r.grid[k]).field(r.cv_mse[k]).field(r.grid[k] == r.chosen ? 1 : 0);
    w.end_row();
  }
  std::cout << method << ": chose " << format_double(r.chosen) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Environment-adaptive covariate selection"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Base seed (overrides [run] base_seed)");
  app.add_option("--config", g.config_path, "INI experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (overrides [run] output_dir)");

  std::string role = "train";
  auto* gen = app.add_subcommand("generate", "Write a simulated multi-environment CSV");
  gen->add_option("--role", role, "train or test grid")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();

  DataOptions fit_data;
  std::string method = "all";
  std::optional<double> value;
  auto* fit = app.add_subcommand("fit-baselines", "Fit OLS, lasso, anchor and ICP baselines");
  add_data_options(fit, fit_data);
  fit->add_option("--method", method, "ols, lasso, anchor, icp or all")
      ->check(CLI::IsMember({"ols", "lasso", "anchor", "icp", "all"}))
      ->capture_default_str();
  fit->add_option("--value", value, "Fixed hyperparameter instead of inner CV");

  DataOptions sel_data;
  std::string heldout;
  auto* sel = app.add_subcommand("train-selector", "Train the discrete subset selector");
  add_data_options(sel, sel_data);
  sel->add_option("--heldout", heldout, "Held-out CSV for the fallback guard");

  DataOptions gate_data;
  GateTrainConfig gate;
  std::string context = "summary";
  std::string mode = "hard";
  auto* gt = app.add_subcommand("train-gate", "Train the soft-gating model");
  add_data_options(gt, gate_data);
  gt->add_option("--epochs", gate.max_epochs, "Adam epochs")->capture_default_str();
  gt->add_option("--learning-rate", gate.learning_rate, "Adam step")->capture_default_str();
  gt->add_option("--temperature", gate.temperature, "Gate temperature")->capture_default_str();
  gt->add_option("--constraint", gate.constraint, "Causal covariate indices S");
  gt->add_option("--constraint-mode", mode, "hard or soft")
      ->check(CLI::IsMember({"hard", "soft"}))
      ->capture_default_str();
  gt->add_option("--gamma", gate.soft_prior_gamma, "Soft-prior weight")->capture_default_str();
  gt->add_option("--l1", gate.l1_gates, "L1 weight on free gates")->capture_default_str();
  gt->add_option("--context", context, "summary or set_encoder")
      ->check(CLI::IsMember({"summary", "set_encoder"}))
      ->capture_default_str();

  std::optional<double> beta3;
  auto* an = app.add_subcommand("analytic-rule", "Tabulate the closed-form selection rule");
  an->add_option("--beta3", beta3, "Pooled X coefficient (default: base-population value)");

  std::optional<int> reps;
  auto* sw = app.add_subcommand("sweep", "Run the simulation sweep");
  sw->add_option("--replications", reps, "Override [run] replications");

  auto* cx = app.add_subcommand("crossover", "Empirical vs analytic risk crossover");

  DataOptions tune_data;
  std::string tune_method = "lasso";
  auto* tn = app.add_subcommand("tune", "Environment-level inner CV for a baseline");
  add_data_options(tn, tune_data);
  tn->add_option("--method", tune_method, "lasso, anchor or icp")
      ->check(CLI::IsMember({"lasso", "anchor", "icp"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*gen) return cmd_generate(g, role);
    if (*fit) return cmd_fit_baselines(g, fit_data, method, value);
    if (*sel) return cmd_train_selector(g, sel_data, heldout);
    if (*gt) {
      gate.context = parse_gate_context(context);
      gate.constraint_mode = parse_constraint_mode(mode);
      return cmd_train_gate(g, gate_data, gate);
    }
    if (*an) return cmd_analytic(g, beta3);
    if (*sw) return cmd_sweep(g, reps);
    if (*cx) return cmd_crossover(g);
    if (*tn) return cmd_tune(g, tune_data, tune_method);
  } catch (const eacs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
