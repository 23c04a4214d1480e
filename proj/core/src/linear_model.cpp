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

#include "eacs/linear_model.hpp"

#include <Eigen/Dense>

#include "eacs/error.hpp"

namespace eacs {

Eigen::VectorXd LinearPredictor::predict(const Eigen::MatrixXd& covariates) const {
  if (static_cast<std::size_t>(covariates.cols()) != mask.size()) {
    throw InvalidArgument("LinearPredictor::predict: covariate width mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Constant(covariates.rows(), intercept);
  const auto active = mask.active();
  for (std::size_t k = 0; k < active.size(); ++k) {
    out += coefficients(static_cast<Eigen::Index>(k)) * covariates.col(active[k]);
  }
  return out;
}

Eigen::VectorXd LinearPredictor::full_coefficients() const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mask.size()));
  const auto active = mask.active();
  for (std::size_t k = 0; k < active.size(); ++k) {
    full(active[k]) = coefficients(static_cast<Eigen::Index>(k));
  }
  return full;
}

void LinearPredictor::validate() const {
  if (static_cast<std::size_t>(coefficients.size()) != mask.count()) {
    throw InvalidArgument("LinearPredictor: coefficient count does not match the mask");
  }
}

Eigen::VectorXd min_norm_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  if (design.rows() != y.size()) throw InvalidArgument("least squares: row mismatch");
  if (design.cols() == 0) return Eigen::VectorXd();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  return cod.solve(y);
}

LinearPredictor fit_ols(const Eigen::MatrixXd& covariates, const Eigen::VectorXd& y,
                        const SubsetMask& mask) {
  if (covariates.rows() == 0) throw DataError("fit_ols: zero rows");
  if (covariates.rows() != y.size()) throw DataError("fit_ols: outcome length mismatch");
  if (static_cast<std::size_t>(covariates.cols()) != mask.size()) {
    throw InvalidArgument("fit_ols: mask width mismatch");
  }
  const auto active = mask.active();
  const double y_mean = y.mean();
  LinearPredictor out;
  out.mask = mask;
  out.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active.size()));
  if (active.empty()) {
    out.intercept = y_mean;
    return out;
  }
  Eigen::MatrixXd x(covariates.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = covariates.col(active[k]);
  }
  // Centering removes the intercept column so the min-norm solution never
  // shrinks the intercept.
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  x.rowwise() -= x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  out.coefficients = min_norm_least_squares(x, yc);
  out.intercept = y_mean - x_mean.dot(out.coefficients);
  return out;
}

LinearPredictor fit_pooled_ols(const MultiEnvData& data, const SubsetMask& mask) {
  if (data.empty() || data.total_rows() == 0) throw DataError("fit_pooled_ols: zero rows");
  if (!data.all_have_outcomes()) throw DataError("fit_pooled_ols: missing outcomes");
  return fit_ols(data.stacked_covariates(), data.stacked_outcomes(), mask);
}

double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction) {
  if (y.size() != prediction.size() || y.size() == 0) {
    throw InvalidArgument("mean_squared_error: size mismatch");
  }
  return (y - prediction).squaredNorm() / static_cast<double>(y.size());
}

double empirical_risk(const EnvDataset& env, const LinearPredictor& predictor) {
  if (!env.has_outcomes()) {
    throw DataError("empirical_risk: environment '" + env.env_id + "' has no outcomes");
  }
  return mean_squared_error(*env.outcomes, predictor.predict(env.covariates));
}

}  // namespace eacs
