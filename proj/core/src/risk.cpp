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

#include "eacs/risk.hpp"

#include <cmath>
#include <fstream>

#include "eacs/csv.hpp"
#include "eacs/error.hpp"

namespace eacs {

std::vector<LinearPredictor> fit_library(const MultiEnvData& data, const SubsetLibrary& library) {
  if (!data.all_have_outcomes()) throw DataError("fit_library: missing outcomes");
  const Eigen::MatrixXd x = data.stacked_covariates();
  const Eigen::VectorXd y = data.stacked_outcomes();
  std::vector<LinearPredictor> out;
  out.reserve(library.size());
  for (const auto& mask : library.masks()) out.push_back(fit_ols(x, y, mask));
  return out;
}

int argmin_earliest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row(k) < row(best)) best = static_cast<int>(k);
  }
  return best;
}

RiskTable build_risk_table(const MultiEnvData& data, const SubsetLibrary& library,
                           const std::vector<LinearPredictor>& predictors) {
  if (predictors.size() != library.size()) {
    throw InvalidArgument("build_risk_table: predictors not aligned with the library");
  }
  for (std::size_t k = 0; k < predictors.size(); ++k) {
    if (!(predictors[k].mask == library[k])) {
      throw InvalidArgument("build_risk_table: predictor " + std::to_string(k) +
                            " mask differs from the library mask");
    }
  }
  RiskTable table;
  table.library = library;
  table.risks.resize(static_cast<Eigen::Index>(data.size()),
                     static_cast<Eigen::Index>(library.size()));
  for (std::size_t e = 0; e < data.size(); ++e) {
    const auto& env = data[e];
    table.env_ids.push_back(env.env_id);
    for (std::size_t k = 0; k < predictors.size(); ++k) {
      const double r = empirical_risk(env, predictors[k]);
      if (!std::isfinite(r)) throw NumericalError("build_risk_table: nonfinite risk");
      table.risks(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(k)) = r;
    }
    table.labels.push_back(argmin_earliest(table.risks.row(static_cast<Eigen::Index>(e))));
  }
  return table;
}

double oracle_risk(const RiskTable& table, std::size_t env) {
  if (table.risks.rows() == 0) throw InvalidArgument("oracle_risk: empty table");
  return table.risks.row(static_cast<Eigen::Index>(env)).minCoeff();
}

std::size_t best_fixed_index(const RiskTable& table) {
  if (table.risks.rows() == 0 || table.risks.cols() == 0) {
    throw InvalidArgument("best_fixed_subset: empty table");
  }
  const Eigen::RowVectorXd avg = table.risks.colwise().mean();
  return static_cast<std::size_t>(argmin_earliest(avg));
}

SubsetMask best_fixed_subset(const RiskTable& table) {
  return table.library[best_fixed_index(table)];
}

void write_risk_table_csv(const std::string& path, const RiskTable& table,
                          const std::vector<std::string>& covariate_names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  CsvWriter w(out);
  w.field("env_id");
  for (const auto& mask : table.library.masks()) w.field(mask.label(covariate_names));
  w.field("label");
  w.end_row();
  for (std::size_t e = 0; e < table.num_envs(); ++e) {
    w.field(table.env_ids[e]);
    for (Eigen::Index k = 0; k < table.risks.cols(); ++k) {
      w.field(table.risks(static_cast<Eigen::Index>(e), k));
    }
    w.field(table.library[static_cast<std::size_t>(table.labels[e])].label(covariate_names));
    w.end_row();
  }
}

}  // namespace eacs
