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
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "eacs/rng.hpp"

namespace eacs {

enum class PerturbationTarget {
  kNone,
  kC1MeanShift,
  kC2AddNoise,
  kXAddNoise,
};

std::string_view to_string(PerturbationTarget target);
PerturbationTarget parse_perturbation_target(std::string_view name);

/// A single intervention on the running-example model. `level` is the mean
/// shift for kC1MeanShift and the noise SD for the two additive-noise targets.
struct PerturbationSpec {
  PerturbationTarget target = PerturbationTarget::kNone;
  double level = 0.0;

  /// Level actually applied; kNone is the identity regardless of `level`.
  double effective_level() const {
    return target == PerturbationTarget::kNone ? 0.0 : level;
  }
  void validate() const;
};

/// The three perturbation families emitted by a grid, in emission order.
inline constexpr PerturbationTarget kGridTargets[] = {
    PerturbationTarget::kC1MeanShift,
    PerturbationTarget::kC2AddNoise,
    PerturbationTarget::kXAddNoise,
};

struct NoiseConfig {
  double outcome_sd_train = 1.0;
  double outcome_sd_test = 1.0;
  void validate() const;
};

/// One environment: an n_e x p covariate matrix with optional outcomes.
struct EnvDataset {
  std::string env_id;
  Eigen::MatrixXd covariates;
  std::optional<Eigen::VectorXd> outcomes;
  std::vector<std::string> covariate_names;
  /// Set for synthetic environments; used by population-level diagnostics.
  std::optional<PerturbationSpec> perturbation;

  Eigen::Index rows() const { return covariates.rows(); }
  Eigen::Index cols() const { return covariates.cols(); }
  bool has_outcomes() const { return outcomes.has_value(); }
  const Eigen::VectorXd& y() const;

  /// Throws DataError when a structural invariant is violated.
  void validate() const;
};

/// A collection of environments sharing one covariate schema.
class MultiEnvData {
 public:
  MultiEnvData() = default;
  explicit MultiEnvData(std::vector<EnvDataset> environments);

  const std::vector<EnvDataset>& environments() const { return envs_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  std::size_t size() const { return envs_.size(); }
  bool empty() const { return envs_.empty(); }
  Eigen::Index num_covariates() const {
    return static_cast<Eigen::Index>(names_.size());
  }
  Eigen::Index total_rows() const;
  bool all_have_outcomes() const;
  const EnvDataset& operator[](std::size_t i) const { return envs_[i]; }

  /// Environments at the given positions, in the given order.
  MultiEnvData subset(const std::vector<std::size_t>& indices) const;

  /// Row-stacked covariates and outcomes (outcomes empty if any env lacks them).
  Eigen::MatrixXd stacked_covariates() const;
  Eigen::VectorXd stacked_outcomes() const;

 private:
  std::vector<EnvDataset> envs_;
  std::vector<std::string> names_;
};

inline const std::vector<std::string>& running_example_names() {
  static const std::vector<std::string> names{"C2", "X"};
  return names;
}

/// Draws n rows of (C2, X, Y) from the running example under `perturb`:
///   Y = C1 + C2 + eps_Y,  X = C1 - C2 + eps_X,
/// with C1, C2, eps_X standard normal and eps_Y ~ N(0, outcome_sd^2).
/// C1 is latent and never emitted.
EnvDataset generate_running_example(const PerturbationSpec& perturb, int n,
                                    double outcome_sd, Engine& engine,
                                    std::string env_id = "env");
EnvDataset generate_running_example(const PerturbationSpec& perturb, int n,
                                    double outcome_sd, std::uint64_t seed);

/// How perturbation levels are assigned inside a grid. With an empty
/// `grid`, each environment draws its level uniformly from [0, max_level];
/// otherwise it draws uniformly among the listed levels.
struct LevelSampling {
  double max_level = 4.0;
  std::vector<double> grid;

  void validate() const;
  double draw(Engine& engine) const;
};

struct GridSpec {
  LevelSampling levels;
  int per_type_count = 100;
  int n = 100;
};

/// per_type_count environments for each of the three perturbation types,
/// type-major. The k-th environment of type t draws from
/// StreamKey{seed, replication, role, (t << 32) | k}, so smaller grids are
/// prefixes of larger ones and row draws nest across sample sizes.
MultiEnvData generate_environment_grid(const GridSpec& spec, double outcome_sd,
                                       std::uint64_t seed,
                                       std::uint64_t replication = 0,
                                       StreamRole role = StreamRole::kTrain);

struct TrainTestGrids {
  MultiEnvData train;
  MultiEnvData test;
};

/// Training grid with outcome_sd_train and a test grid with fresh level draws
/// and outcome_sd_test, on disjoint substreams.
TrainTestGrids generate_train_test(const GridSpec& train, const GridSpec& test,
                                   const NoiseConfig& noise, std::uint64_t seed,
                                   std::uint64_t replication);

}  // namespace eacs
