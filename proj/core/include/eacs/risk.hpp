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

#include <string>
#include <vector>

#include <Eigen/Core>

#include "eacs/env_data.hpp"
#include "eacs/linear_model.hpp"
#include "eacs/subsets.hpp"

namespace eacs {

/// Environments x subsets matrix of empirical risks with per-row argmin
/// labels. Ties resolve to the earliest mask in library order.
struct RiskTable {
  std::vector<std::string> env_ids;
  SubsetLibrary library;
  Eigen::MatrixXd risks;
  std::vector<int> labels;

  std::size_t num_envs() const { return env_ids.size(); }
};

/// Pooled OLS predictor for every mask, in library order.
std::vector<LinearPredictor> fit_library(const MultiEnvData& data, const SubsetLibrary& library);

RiskTable build_risk_table(const MultiEnvData& data, const SubsetLibrary& library,
                           const std::vector<LinearPredictor>& predictors);

/// Index of the row minimum, earliest on ties.
int argmin_earliest(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Row minimum for environment `env`.
double oracle_risk(const RiskTable& table, std::size_t env);

/// Mask with the lowest environment-averaged risk (environments weighted
/// equally), earliest on ties.
std::size_t best_fixed_index(const RiskTable& table);
SubsetMask best_fixed_subset(const RiskTable& table);

/// env_id, one column per mask (labelled by covariate names), label.
void write_risk_table_csv(const std::string& path, const RiskTable& table,
                          const std::vector<std::string>& covariate_names);

}  // namespace eacs
