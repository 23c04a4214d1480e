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

#include <Eigen/Core>

#include "eacs/env_data.hpp"
#include "eacs/subsets.hpp"

namespace eacs {

/// Least-squares model restricted to a mask. `coefficients` has one entry
/// per active covariate, in increasing covariate index.
struct LinearPredictor {
  SubsetMask mask;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;

  /// Predictions for a full-width covariate matrix (inactive columns ignored).
  Eigen::VectorXd predict(const Eigen::MatrixXd& covariates) const;
  /// Coefficients scattered to full width, zeros at inactive covariates.
  Eigen::VectorXd full_coefficients() const;
  void validate() const;
};

/// Minimum-norm solution of min ||A b - y|| via complete orthogonal
/// decomposition (no normal equations).
Eigen::VectorXd min_norm_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

/// OLS with an unpenalized intercept on the masked columns of `covariates`.
/// Rank-deficient designs get the minimum-norm slope vector.
LinearPredictor fit_ols(const Eigen::MatrixXd& covariates, const Eigen::VectorXd& y,
                        const SubsetMask& mask);

/// OLS on all rows of all environments pooled together.
LinearPredictor fit_pooled_ols(const MultiEnvData& data, const SubsetMask& mask);

/// Mean squared error of `predictor` over the environment's rows.
double empirical_risk(const EnvDataset& env, const LinearPredictor& predictor);
double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction);

}  // namespace eacs
