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

#include "eacs/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "eacs/analytic.hpp"
#include "eacs/baselines.hpp"
#include "eacs/csv.hpp"
#include "eacs/error.hpp"
#include "eacs/risk.hpp"
#include "eacs/summaries.hpp"

namespace eacs {

SummaryConfig summary_variant(const SummaryConfig& base, const std::string& variant) {
  SummaryConfig s = base;
  if (variant == "full") return s;
  s.include_sds = true;
  s.include_pairwise_corr = true;
  if (variant == "r") {
    s.keep_features = {"corr[C2,X]"};
  } else if (variant == "s2") {
    s.keep_features = {"sd[C2]"};
  } else if (variant == "s3") {
    s.keep_features = {"sd[X]"};
  } else {
    throw InvalidArgument("unknown summary variant '" + variant + "'");
  }
  return s;
}

CellSpec default_cell(const ExperimentConfig& cfg) {
  CellSpec c;
  c.condition = "default";
  c.sigma = cfg.dgp.sigma;
  c.level = "default";
  c.train.levels = LevelSampling{cfg.dgp.max_level, cfg.dgp.level_grid};
  c.train.per_type_count = cfg.dgp.envs_per_type;
  c.train.n = cfg.dgp.samples;
  c.test.levels = c.train.levels;
  c.test.per_type_count = cfg.dgp.test_envs_per_type;
  c.test.n = cfg.dgp.test_samples;
  c.noise = NoiseConfig{cfg.dgp.sigma, cfg.dgp.sigma_test};
  c.summary = cfg.selector.summary;
  c.selector = cfg.selector.train;
  c.constraint = cfg.selector.constraint;
  c.run_constrained = cfg.selector.run_constrained;
  return c;
}

std::vector<CellSpec> expand_cells(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<CellSpec> cells;
  const CellSpec base = default_cell(cfg);
  for (const auto& cond : cfg.sweep.conditions) {
    if (cond == "envs" || cond == "samples") {
      const auto& axis = cond == "envs" ? cfg.sweep.envs_per_type : cfg.sweep.samples;
      for (double sigma : cfg.sweep.sigmas) {
        for (int v : axis) {
          CellSpec c = base;
          c.condition = cond;
          c.sigma = sigma;
          c.noise.outcome_sd_train = sigma;
          c.level = std::to_string(v);
          (cond == "envs" ? c.train.per_type_count : c.train.n) = v;
          cells.push_back(std::move(c));
        }
      }
    } else if (cond == "summaries") {
      for (const auto& v : cfg.sweep.summary_variants) {
        CellSpec c = base;
        c.condition = cond;
        c.level = v;
        c.summary = summary_variant(base.summary, v);
        cells.push_back(std::move(c));
      }
    } else {
      for (double cov : cfg.sweep.coverage) {
        CellSpec c = base;
        c.condition = cond;
        c.level = format_double(cov);
        // Coverage limits training levels only; test environments keep the
        // full range.
        c.train.levels = LevelSampling{cov, {}};
        cells.push_back(std::move(c));
      }
    }
  }
  return cells;
}

namespace {

std::uint64_t model_seed(std::uint64_t seed, std::uint64_t replication) {
  Engine e = make_engine(StreamKey{seed, replication, StreamRole::kModel, 0});
  return e();
}

ArmOutcome evaluate_arm(const std::string& name, const SubsetLibrary& library,
                        const MultiEnvData& train, const MultiEnvData& test,
                        const std::vector<EnvSummary>& train_summaries,
                        const std::vector<EnvSummary>& test_summaries, const CellSpec& cell,
                        std::uint64_t selector_seed) {
  const auto predictors = fit_library(train, library);
  const RiskTable train_table = build_risk_table(train, library, predictors);
  SelectorTrainConfig sel = cell.selector;
  sel.seed = selector_seed;
  const SelectorModel model =
      train_selector(train_summaries, train_table.labels, library, sel, cell.summary);
  const RiskTable test_table = build_risk_table(test, library, predictors);
  const std::size_t fixed = best_fixed_index(train_table);

  ArmOutcome out;
  out.selector = name;
  const auto num_envs = static_cast<double>(test.size());
  out.mse_fixed.assign(library.size(), 0.0);
  for (const auto& m : library.masks()) out.mask_labels.push_back(m.label(train.covariate_names()));
  double hits = 0.0;
  out.min_excess_risk = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < test.size(); ++e) {
    const auto row = test_table.risks.row(static_cast<Eigen::Index>(e));
    const double best = row.minCoeff();
    double risk = 0.0;
    const std::size_t chosen = model.predict_class(test_summaries[e]);
    if (model.rule == PredictionRule::kHard) {
      risk = row(static_cast<Eigen::Index>(chosen));
    } else {
      risk = mean_squared_error(
          *test[e].outcomes, predict_environment(model, predictors, test[e], test_summaries[e]));
    }
    if (row(static_cast<Eigen::Index>(chosen)) == best) hits += 1.0;
    out.mse_adaptive += risk;
    out.mse_oracle += best;
    out.mse_best_fixed += row(static_cast<Eigen::Index>(fixed));
    out.excess_risk += risk - best;
    out.min_excess_risk = std::min(out.min_excess_risk, risk - best);
    for (Eigen::Index k = 0; k < row.size(); ++k) out.mse_fixed[static_cast<std::size_t>(k)] += row(k);
  }
  out.mse_adaptive /= num_envs;
  out.mse_oracle /= num_envs;
  out.mse_best_fixed /= num_envs;
  out.excess_risk /= num_envs;
  out.selection_prob = hits / num_envs;
  for (double& v : out.mse_fixed) v /= num_envs;
  return out;
}

}  // namespace

std::vector<ArmOutcome> run_replication(const CellSpec& cell, std::uint64_t seed,
                                        std::uint64_t replication) {
  const TrainTestGrids grids = generate_train_test(cell.train, cell.test, cell.noise, seed,
                                                   replication);
  const auto train_summaries = summarize_all(grids.train, cell.summary);
  const auto test_summaries = summarize_all(grids.test, cell.summary);
  const auto p = static_cast<std::size_t>(grids.train.num_covariates());
  const std::uint64_t sel_seed = model_seed(seed, replication);

  std::vector<ArmOutcome> arms;
  arms.push_back(evaluate_arm("unconstrained", build_library(p), grids.train, grids.test,
                              train_summaries, test_summaries, cell, sel_seed));
  if (cell.run_constrained && !cell.constraint.empty()) {
    arms.push_back(evaluate_arm("constrained", build_library(p, cell.constraint), grids.train,
                                grids.test, train_summaries, test_summaries, cell, sel_seed));
  }
  return arms;
}

MetricRow summarize_metric(const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("summarize_metric: no values");
  MetricRow r;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double half = 1.96 * r.sd / std::sqrt(n);
  r.ci_low = r.mean - half;
  r.ci_high = r.mean + half;
  r.replications = static_cast<int>(values.size());
  return r;
}

namespace {

template <typename F>
void parallel_for(int count, int threads, F&& body) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

CellReport run_cell(const CellSpec& cell, int replications, std::uint64_t seed, int threads) {
  CellReport report;
  report.spec = cell;
  if (replications < 1) throw InvalidArgument("run_cell: replications must be >= 1");
  std::vector<std::vector<ArmOutcome>> results(static_cast<std::size_t>(replications));
  try {
    parallel_for(replications, threads, [&](int r) {
      results[static_cast<std::size_t>(r)] =
          run_replication(cell, seed, static_cast<std::uint64_t>(r));
    });
  } catch (const std::exception& e) {
    report.error = e.what();
    return report;
  }

  const std::size_t num_arms = results.front().size();
  for (std::size_t a = 0; a < num_arms; ++a) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    auto push = [&](const std::string& metric, auto getter) {
      std::vector<double> v;
      for (const auto& rep : results) v.push_back(getter(rep[a]));
      series.emplace_back(metric, std::move(v));
    };
    push("mse_adaptive", [](const ArmOutcome& o) { return o.mse_adaptive; });
    push("mse_oracle", [](const ArmOutcome& o) { return o.mse_oracle; });
    push("mse_best_fixed", [](const ArmOutcome& o) { return o.mse_best_fixed; });
    const auto& labels = results.front()[a].mask_labels;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      push("mse_fixed" + labels[k], [k](const ArmOutcome& o) { return o.mse_fixed[k]; });
    }
    push("selection_prob", [](const ArmOutcome& o) { return o.selection_prob; });
    push("excess_risk", [](const ArmOutcome& o) { return o.excess_risk; });
    push("min_excess_risk", [](const ArmOutcome& o) { return o.min_excess_risk; });
    for (auto& [metric, values] : series) {
      MetricRow row = summarize_metric(values);
      row.condition = cell.condition;
      row.sigma = cell.sigma;
      row.level = cell.level;
      row.selector = results.front()[a].selector;
      row.metric = metric;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

const MetricRow& MetricReport::find(const std::string& condition, double sigma,
                                    const std::string& level, const std::string& selector,
                                    const std::string& metric) const {
  for (const auto& cell : cells) {
    for (const auto& r : cell.rows) {
      if (r.condition == condition && r.sigma == sigma && r.level == level &&
          r.selector == selector && r.metric == metric) {
        return r;
      }
    }
  }
  throw InvalidArgument("MetricReport: no row for " + condition + "/" + format_double(sigma) +
                        "/" + level + "/" + selector + "/" + metric);
}

void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  CsvWriter w(out);
  w.row({"condition", "sigma", "level", "selector", "metric", "mean", "ci_low", "ci_high",
         "replications"});
  for (const auto& r : rows) {
    w.field(r.condition).field(r.sigma).field(r.level).field(r.selector).field(r.metric);
    w.field(r.mean).field(r.ci_low).field(r.ci_high).field(r.replications);
    w.end_row();
  }
}

MetricReport run_sweep(const ExperimentConfig& cfg, bool write_outputs) {
  const auto cells = expand_cells(cfg);
  MetricReport report;
  for (const auto& cell : cells) {
    report.cells.push_back(run_cell(cell, cfg.run.replications, cfg.run.base_seed, cfg.run.threads));
  }
  if (!write_outputs) return report;

  const std::filesystem::path dir(cfg.run.output_dir);
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<MetricRow>> by_condition;
  for (const auto& cond : cfg.sweep.conditions) by_condition[cond];
  for (const auto& cell : report.cells) {
    auto& rows = by_condition[cell.spec.condition];
    rows.insert(rows.end(), cell.rows.begin(), cell.rows.end());
  }
  for (const auto& [cond, rows] : by_condition) {
    write_metric_csv((dir / ("sweep_" + cond + ".csv")).string(), rows);
  }

  {
    std::ofstream out(dir / "failures.csv", std::ios::binary);
    CsvWriter w(out);
    w.row({"condition", "sigma", "level", "error"});
    for (const auto& cell : report.cells) {
      if (!cell.error) continue;
      w.field(cell.spec.condition).field(cell.spec.sigma).field(cell.spec.level).field(*cell.error);
      w.end_row();
    }
  }
  {
    std::ofstream out(dir / "seeds.csv", std::ios::binary);
    CsvWriter w(out);
    w.row({"condition", "sigma", "level", "replication", "base_seed", "train_stream",
           "test_stream", "selector_seed"});
    for (const auto& cell : report.cells) {
      for (int r = 0; r < cfg.run.replications; ++r) {
        const auto rep = static_cast<std::uint64_t>(r);
        w.field(cell.spec.condition).field(cell.spec.sigma).field(cell.spec.level).field(r);
        w.field(std::to_string(cfg.run.base_seed));
        w.field(std::to_string(cfg.run.base_seed) + "/" + std::to_string(r) + "/train");
        w.field(std::to_string(cfg.run.base_seed) + "/" + std::to_string(r) + "/test");
        w.field(std::to_string(model_seed(cfg.run.base_seed, rep)));
        w.end_row();
      }
    }
  }
  save_config(dir / "config.resolved.ini", cfg);
  return report;
}

std::vector<CrossoverRow> run_crossover(const ExperimentConfig& cfg, bool write_outputs) {
  cfg.validate();
  const std::uint64_t seed = cfg.run.base_seed;
  std::vector<EnvDataset> base;
  for (int k = 0; k < cfg.crossover.train_envs; ++k) {
    Engine engine = make_engine(
        StreamKey{seed, 0, StreamRole::kAuxiliary, static_cast<std::uint64_t>(k)});
    base.push_back(generate_running_example(PerturbationSpec{}, cfg.crossover.train_samples,
                                            cfg.dgp.sigma, engine,
                                            "base-" + std::to_string(k)));
  }
  const MultiEnvData train(std::move(base));
  const SubsetMask causal = SubsetMask::from_indices(2, {0});
  const SubsetMask full = SubsetMask::all(2);
  const LinearPredictor f_causal = fit_pooled_ols(train, causal);
  const LinearPredictor f_full = fit_pooled_ols(train, full);
  const double beta3 = f_full.coefficients(1);

  std::vector<CrossoverRow> rows;
  std::uint64_t type_index = 0;
  for (auto type : kGridTargets) {
    for (std::size_t d = 0; d < cfg.crossover.deltas.size(); ++d) {
      const PerturbationSpec perturb{type, cfg.crossover.deltas[d]};
      std::vector<double> a(static_cast<std::size_t>(cfg.run.replications));
      std::vector<double> b(a.size());
      std::vector<double> diff(a.size());
      parallel_for(cfg.run.replications, cfg.run.threads, [&](int r) {
        Engine engine = make_engine(StreamKey{seed, static_cast<std::uint64_t>(r),
                                              StreamRole::kTest, (type_index << 32) | d});
        const EnvDataset env =
            generate_running_example(perturb, cfg.crossover.test_samples, cfg.dgp.sigma_test,
                                     engine);
        const auto i = static_cast<std::size_t>(r);
        a[i] = empirical_risk(env, f_causal);
        b[i] = empirical_risk(env, f_full);
        diff[i] = a[i] - b[i];
      });
      CrossoverRow row;
      row.delta = perturb.level;
      row.type = type;
      row.mse_causal = summarize_metric(a);
      row.mse_full = summarize_metric(b);
      row.difference = summarize_metric(diff);
      row.beta3 = beta3;
      row.delta_analytic = risk_difference(analytic_params(perturb, beta3));
      rows.push_back(std::move(row));
    }
    ++type_index;
  }

  if (write_outputs) {
    const std::filesystem::path dir(cfg.run.output_dir);
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "crossover.csv", std::ios::binary);
    CsvWriter w(out);
    w.row({"delta", "type", "mse_c2", "mse_c2_ci_low", "mse_c2_ci_high", "mse_c2_x",
           "mse_c2_x_ci_low", "mse_c2_x_ci_high", "diff", "diff_ci_low", "diff_ci_high",
           "delta_analytic", "beta3"});
    for (const auto& r : rows) {
      w.field(r.delta).field(to_string(r.type));
      for (const MetricRow* m : {&r.mse_causal, &r.mse_full, &r.difference}) {
        w.field(m->mean).field(m->ci_low).field(m->ci_high);
      }
      w.field(r.delta_analytic).field(r.beta3);
      w.end_row();
    }
    save_config(dir / "config.resolved.ini", cfg);
  }
  return rows;
}

std::optional<double> crossing_point(const std::vector<CrossoverRow>& rows,
                                     PerturbationTarget type) {
  std::vector<const CrossoverRow*> sel;
  for (const auto& r : rows) {
    if (r.type == type) sel.push_back(&r);
  }
  std::sort(sel.begin(), sel.end(),
            [](const CrossoverRow* x, const CrossoverRow* y) { return x->delta < y->delta; });
  for (std::size_t k = 0; k + 1 < sel.size(); ++k) {
    const double d0 = sel[k]->difference.mean;
    const double d1 = sel[k + 1]->difference.mean;
    if (d0 > 0.0 && d1 <= 0.0) {
      const double x0 = sel[k]->delta;
      const double x1 = sel[k + 1]->delta;
      return x0 + (x1 - x0) * d0 / (d0 - d1);
    }
  }
  return std::nullopt;
}

std::string to_string(TuneMethod method) {
  switch (method) {
    case TuneMethod::kLasso:
      return "lasso";
    case TuneMethod::kAnchor:
      return "anchor";
    case TuneMethod::kIcp:
      break;
  }
  return "icp";
}

TuneMethod parse_tune_method(const std::string& text) {
  if (text == "lasso") return TuneMethod::kLasso;
  if (text == "anchor") return TuneMethod::kAnchor;
  if (text == "icp") return TuneMethod::kIcp;
  throw InvalidArgument("unknown tuning method '" + text + "'");
}

TuneResult tune_inner_cv(TuneMethod method, const MultiEnvData& data,
                         const std::vector<double>& grid, int folds) {
  if (grid.empty()) throw InvalidArgument("tune_inner_cv: empty grid");
  if (folds < 2) throw InvalidArgument("tune_inner_cv: folds must be >= 2");
  if (data.size() < static_cast<std::size_t>(folds)) {
    throw InvalidArgument("tune_inner_cv: " + std::to_string(data.size()) +
                          " environments for " + std::to_string(folds) + " folds");
  }
  if (!data.all_have_outcomes()) throw DataError("tune_inner_cv: outcomes required");

  TuneResult result;
  result.grid = grid;
  result.cv_mse.assign(grid.size(), 0.0);
  const auto p = static_cast<std::size_t>(data.num_covariates());
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> fit_idx;
    std::vector<std::size_t> val_idx;
    for (std::size_t e = 0; e < data.size(); ++e) {
      (static_cast<int>(e % static_cast<std::size_t>(folds)) == f ? val_idx : fit_idx).push_back(e);
    }
    const MultiEnvData fit = data.subset(fit_idx);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      LinearPredictor model;
      switch (method) {
        case TuneMethod::kLasso:
          model = fit_lasso(fit, LassoConfig{grid[g]});
          break;
        case TuneMethod::kAnchor:
          model = fit_anchor(fit, AnchorConfig{grid[g]});
          break;
        case TuneMethod::kIcp: {
          IcpConfig icp;
          icp.alpha_threshold = grid[g];
          model = fit_pooled_ols(fit, icp_select(fit, build_library(p), icp));
          break;
        }
      }
      for (std::size_t e : val_idx) result.cv_mse[g] += empirical_risk(data[e], model);
    }
  }
  for (double& v : result.cv_mse) v /= static_cast<double>(data.size());

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (result.cv_mse[g] < result.cv_mse[best] ||
        (result.cv_mse[g] == result.cv_mse[best] && grid[g] < grid[best])) {
      best = g;
    }
  }
  result.chosen = grid[best];
  return result;
}

}  // namespace eacs
