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

#include "eacs/env_data.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <unordered_set>

#include "eacs/error.hpp"

namespace eacs {

std::string_view to_string(PerturbationTarget target) {
  switch (target) {
    case PerturbationTarget::kNone:
      return "none";
    case PerturbationTarget::kC1MeanShift:
      return "C1_mean_shift";
    case PerturbationTarget::kC2AddNoise:
      return "C2_add_noise";
    case PerturbationTarget::kXAddNoise:
      return "X_add_noise";
  }
  return "none";
}

PerturbationTarget parse_perturbation_target(std::string_view name) {
  for (auto t : {PerturbationTarget::kNone, PerturbationTarget::kC1MeanShift,
                 PerturbationTarget::kC2AddNoise, PerturbationTarget::kXAddNoise}) {
    if (to_string(t) == name) return t;
  }
  throw InvalidArgument("unknown perturbation target '" + std::string(name) + "'");
}

void PerturbationSpec::validate() const {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw InvalidArgument("perturbation level must be finite and >= 0");
  }
}

void NoiseConfig::validate() const {
  if (!(outcome_sd_train > 0.0) || !(outcome_sd_test > 0.0)) {
    throw InvalidArgument("outcome noise SDs must be > 0");
  }
}

const Eigen::VectorXd& EnvDataset::y() const {
  if (!outcomes) throw DataError("environment '" + env_id + "' has no outcomes");
  return *outcomes;
}

void EnvDataset::validate() const {
  if (covariates.rows() < 1) {
    throw DataError("environment '" + env_id + "' has no rows");
  }
  if (static_cast<std::size_t>(covariates.cols()) != covariate_names.size()) {
    throw DataError("environment '" + env_id +
                    "': covariate_names length does not match column count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : covariate_names) {
    if (!seen.insert(name).second) {
      throw DataError("environment '" + env_id + "': duplicate covariate name '" +
                      name + "'");
    }
  }
  if (outcomes && outcomes->size() != covariates.rows()) {
    throw DataError("environment '" + env_id + "': outcome length mismatch");
  }
}

MultiEnvData::MultiEnvData(std::vector<EnvDataset> environments)
    : envs_(std::move(environments)) {
  if (envs_.empty()) return;
  names_ = envs_.front().covariate_names;
  std::unordered_set<std::string> ids;
  for (const auto& env : envs_) {
    env.validate();
    if (env.covariate_names != names_) {
      throw DataError("environment '" + env.env_id +
                      "' does not share the covariate schema");
    }
    if (!ids.insert(env.env_id).second) {
      throw DataError("duplicate environment id '" + env.env_id + "'");
    }
  }
}

Eigen::Index MultiEnvData::total_rows() const {
  Eigen::Index total = 0;
  for (const auto& env : envs_) total += env.rows();
  return total;
}

bool MultiEnvData::all_have_outcomes() const {
  for (const auto& env : envs_) {
    if (!env.has_outcomes()) return false;
  }
  return !envs_.empty();
}

MultiEnvData MultiEnvData::subset(const std::vector<std::size_t>& indices) const {
  std::vector<EnvDataset> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(envs_.at(i));
  return MultiEnvData(std::move(picked));
}

Eigen::MatrixXd MultiEnvData::stacked_covariates() const {
  Eigen::MatrixXd out(total_rows(), num_covariates());
  Eigen::Index row = 0;
  for (const auto& env : envs_) {
    out.middleRows(row, env.rows()) = env.covariates;
    row += env.rows();
  }
  return out;
}

Eigen::VectorXd MultiEnvData::stacked_outcomes() const {
  if (!all_have_outcomes()) return {};
  Eigen::VectorXd out(total_rows());
  Eigen::Index row = 0;
  for (const auto& env : envs_) {
    out.segment(row, env.rows()) = *env.outcomes;
    row += env.rows();
  }
  return out;
}

EnvDataset generate_running_example(const PerturbationSpec& perturb, int n,
                                    double outcome_sd, Engine& engine,
                                    std::string env_id) {
  if (n < 1) throw InvalidArgument("generate_running_example: n must be >= 1");
  if (!(outcome_sd > 0.0)) {
    throw InvalidArgument("generate_running_example: outcome_sd must be > 0");
  }
  perturb.validate();
  const double level = perturb.effective_level();
  const double shift = perturb.target == PerturbationTarget::kC1MeanShift ? level : 0.0;
  const double c2_noise = perturb.target == PerturbationTarget::kC2AddNoise ? level : 0.0;
  const double x_noise = perturb.target == PerturbationTarget::kXAddNoise ? level : 0.0;

  std::normal_distribution<double> normal(0.0, 1.0);
  EnvDataset env;
  env.env_id = std::move(env_id);
  env.covariate_names = running_example_names();
  env.covariates.resize(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    // Draw order is fixed: C1, C2, eps_X, eps_Y, then the perturbation noise.
    const double c1 = normal(engine) + shift;
    double c2 = normal(engine);
    const double eps_x = normal(engine);
    const double eps_y = outcome_sd * normal(engine);
    const double extra = (c2_noise > 0.0 || x_noise > 0.0) ? normal(engine) : 0.0;
    c2 += c2_noise * extra;
    double x = c1 - c2 + eps_x;
    x += x_noise * extra;
    env.covariates(i, 0) = c2;
    env.covariates(i, 1) = x;
    y(i) = c1 + c2 + eps_y;
  }
  env.outcomes = std::move(y);
  env.perturbation = perturb;
  return env;
}

EnvDataset generate_running_example(const PerturbationSpec& perturb, int n,
                                    double outcome_sd, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  return generate_running_example(perturb, n, outcome_sd, engine);
}

void LevelSampling::validate() const {
  if (grid.empty()) {
    if (!(max_level >= 0.0) || !std::isfinite(max_level)) {
      throw InvalidArgument("max perturbation level must be finite and >= 0");
    }
    return;
  }
  for (double v : grid) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("perturbation grid levels must be finite and >= 0");
    }
  }
}

double LevelSampling::draw(Engine& engine) const {
  if (grid.empty()) {
    // Always consumes a draw so grids with different max_level stay coupled.
    std::uniform_real_distribution<double> uniform(0.0, max_level);
    return uniform(engine);
  }
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  return grid[pick(engine)];
}

MultiEnvData generate_environment_grid(const GridSpec& spec, double outcome_sd,
                                       std::uint64_t seed, std::uint64_t replication,
                                       StreamRole role) {
  if (spec.per_type_count < 1) {
    throw InvalidArgument("per_type_count must be >= 1");
  }
  if (spec.n < 1) throw InvalidArgument("samples per environment must be >= 1");
  spec.levels.validate();

  const std::string prefix = role == StreamRole::kTest ? "test" : "train";
  std::vector<EnvDataset> envs;
  envs.reserve(3 * static_cast<std::size_t>(spec.per_type_count));
  std::uint64_t type_index = 0;
  for (auto target : kGridTargets) {
    for (int k = 0; k < spec.per_type_count; ++k) {
      const std::uint64_t index = (type_index << 32) | static_cast<std::uint64_t>(k);
      Engine engine = make_engine(StreamKey{seed, replication, role, index});
      PerturbationSpec perturb{target, spec.levels.draw(engine)};
      std::ostringstream id;
      id << prefix << '-' << to_string(target) << '-' << k;
      envs.push_back(generate_running_example(perturb, spec.n, outcome_sd, engine, id.str()));
    }
    ++type_index;
  }
  return MultiEnvData(std::move(envs));
}

TrainTestGrids generate_train_test(const GridSpec& train, const GridSpec& test,
                                   const NoiseConfig& noise, std::uint64_t seed,
                                   std::uint64_t replication) {
  noise.validate();
  return TrainTestGrids{
      generate_environment_grid(train, noise.outcome_sd_train, seed, replication,
                                StreamRole::kTrain),
      generate_environment_grid(test, noise.outcome_sd_test, seed, replication,
                                StreamRole::kTest),
  };
}

}  // namespace eacs
