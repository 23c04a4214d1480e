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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "eacs/selector.hpp"
#include "eacs/summaries.hpp"

namespace eacs {

struct DgpSettings {
  int envs_per_type = 100;
  int samples = 100;
  double sigma = 1.0;
  double sigma_test = 1.0;
  double max_level = 4.0;
  /// Nonempty: levels are drawn from this list instead of U[0, max_level].
  std::vector<double> level_grid;
  int test_envs_per_type = 100;
  int test_samples = 100;
};

struct SelectorSettings {
  SelectorTrainConfig train;
  SummaryConfig summary;
  /// Causal parents S for the constrained arm.
  std::vector<int> constraint{0};
  bool run_constrained = true;
};

struct SweepSettings {
  /// Any of: envs, samples, summaries, coverage.
  std::vector<std::string> conditions{"envs", "samples", "summaries", "coverage"};
  std::vector<int> envs_per_type{5, 20, 100};
  std::vector<int> samples{5, 20, 100};
  std::vector<double> sigmas{1.0, 5.0, 10.0};
  /// full, r, s2, s3
  std::vector<std::string> summary_variants{"full", "r", "s2", "s3"};
  std::vector<double> coverage{4.0, 3.2, 2.4, 1.6, 0.8, 0.0};
};

struct CrossoverSettings {
  std::vector<double> deltas{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  int train_envs = 100;
  int train_samples = 100;
  int test_samples = 100;
};

struct BaselineSettings {
  std::vector<double> lasso_grid{1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> anchor_grid{0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0};
  std::vector<double> icp_grid{0.01, 0.05, 0.10};
  int folds = 3;
};

struct RunSettings {
  int replications = 200;
  std::uint64_t base_seed = 20260101;
  std::string output_dir = "eacs_out";
  /// 0 uses the hardware concurrency.
  int threads = 0;
};

struct ExperimentConfig {
  DgpSettings dgp;
  SelectorSettings selector;
  SweepSettings sweep;
  CrossoverSettings crossover;
  BaselineSettings baselines;
  RunSettings run;

  void validate() const;
};

/// INI document with sections [dgp], [selector], [summary], [sweep],
/// [crossover], [baselines], [run]. Lists are comma-separated. Missing keys
/// keep their defaults; unknown sections or keys are rejected.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& cfg);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

}  // namespace eacs
