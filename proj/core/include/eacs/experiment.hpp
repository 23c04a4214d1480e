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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eacs/config.hpp"
#include "eacs/env_data.hpp"
#include "eacs/gating.hpp"
#include "eacs/selector.hpp"

namespace eacs {

/// One sweep cell: a fully resolved simulation setting.
struct CellSpec {
  std::string condition;
  double sigma = 1.0;
  std::string level;
  GridSpec train;
  GridSpec test;
  NoiseConfig noise;
  SummaryConfig summary;
  SelectorTrainConfig selector;
  std::vector<int> constraint;
  bool run_constrained = true;
};

/// Cells for every configured condition, in condition order then axis order.
std::vector<CellSpec> expand_cells(const ExperimentConfig& cfg);
/// The default-settings cell (no axis varied).
CellSpec default_cell(const ExperimentConfig& cfg);
/// Summary config for a named variant: full, r, s2 or s3.
SummaryConfig summary_variant(const SummaryConfig& base, const std::string& variant);

/// Test-set metrics for one selector arm in one replication.
struct ArmOutcome {
  std::string selector;  // "unconstrained" or "constrained"
  double mse_adaptive = 0.0;
  double mse_oracle = 0.0;
  /// Fixed mask chosen on the training risk table.
  double mse_best_fixed = 0.0;
  std::vector<std::string> mask_labels;
  std::vector<double> mse_fixed;
  double selection_prob = 0.0;
  double excess_risk = 0.0;
  /// Smallest per-environment excess risk.
  double min_excess_risk = 0.0;
};

std::vector<ArmOutcome> run_replication(const CellSpec& cell, std::uint64_t seed,
                                        std::uint64_t replication);

struct MetricRow {
  std::string condition;
  double sigma = 0.0;
  std::string level;
  std::string selector;
  std::string metric;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double sd = 0.0;
  int replications = 0;
};

/// Normal-approximation 95% interval: mean +- 1.96 sd / sqrt(R).
MetricRow summarize_metric(const std::vector<double>& values);

struct CellReport {
  CellSpec spec;
  std::vector<MetricRow> rows;
  std::optional<std::string> error;
};

CellReport run_cell(const CellSpec& cell, int replications, std::uint64_t seed, int threads = 0);

struct MetricReport {
  std::vector<CellReport> cells;

  /// Row lookup; throws when absent.
  const MetricRow& find(const std::string& condition, double sigma, const std::string& level,
                        const std::string& selector, const std::string& metric) const;
};

/// Runs every cell; with `write_outputs`, writes sweep_<condition>.csv,
/// failures.csv, seeds.csv and config.resolved.ini to cfg.run.output_dir.
MetricReport run_sweep(const ExperimentConfig& cfg, bool write_outputs = true);

void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows);

struct CrossoverRow {
  double delta = 0.0;
  PerturbationTarget type = PerturbationTarget::kNone;
  MetricRow mse_causal;  // {C2}
  MetricRow mse_full;    // {C2,X}
  MetricRow difference;  // {C2} minus {C2,X}, paired
  double delta_analytic = 0.0;
  double beta3 = 0.0;
};

/// Base-pooled {C2} and {C2,X} predictors evaluated on fresh environments
/// across crossover.deltas for each perturbation type. Writes crossover.csv
/// when `write_outputs`.
std::vector<CrossoverRow> run_crossover(const ExperimentConfig& cfg, bool write_outputs = true);

/// Linearly interpolated first sign change of the paired difference
/// ({C2} minus {C2,X}) from positive to nonpositive for `type`.
std::optional<double> crossing_point(const std::vector<CrossoverRow>& rows,
                                     PerturbationTarget type);

enum class TuneMethod { kLasso, kAnchor, kIcp };
std::string to_string(TuneMethod method);
TuneMethod parse_tune_method(const std::string& text);

struct TuneResult {
  double chosen = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_mse;
};

/// Environment-level K-fold CV (environment e is in fold e mod K). Returns
/// the grid value with the lowest mean per-environment validation MSE, the
/// smallest value on ties.
TuneResult tune_inner_cv(TuneMethod method, const MultiEnvData& data,
                         const std::vector<double>& grid, int folds);

}  // namespace eacs
