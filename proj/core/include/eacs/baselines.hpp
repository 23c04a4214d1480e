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

#include "eacs/env_data.hpp"
#include "eacs/linear_model.hpp"
#include "eacs/subsets.hpp"

namespace eacs {

struct LassoConfig {
  double lambda = 0.0;
  int max_iters = 10000;
  double tolerance = 1e-10;
  void validate() const;
};

struct LassoFit {
  LinearPredictor predictor;
  /// Objective after each full coordinate sweep.
  std::vector<double> objective_trace;
  int sweeps = 0;
};

/// Cyclic coordinate descent on pooled-standardized covariates for
/// (1/2n)||y - b0 - X b||^2 + lambda ||b||_1. Coefficients are returned on
/// the original scale. Throws NumericalError when max_iters sweeps do not
/// bring the largest coefficient change below tolerance.
LassoFit fit_lasso_path(const MultiEnvData& data, const LassoConfig& cfg);
LinearPredictor fit_lasso(const MultiEnvData& data, const LassoConfig& cfg);

struct AnchorConfig {
  double gamma = 1.0;
  void validate() const;
};

/// OLS after transforming rows with W = I + (sqrt(gamma) - 1) P_A, where P_A
/// projects onto environment indicators (replaces each row by its
/// environment mean component).
LinearPredictor fit_anchor(const MultiEnvData& data, const AnchorConfig& cfg);

/// ||(I - P_A) r||^2 + gamma ||P_A r||^2 for r = y - prediction.
double anchor_objective(const MultiEnvData& data, const LinearPredictor& predictor,
                        double gamma);

struct IcpConfig {
  double alpha_threshold = 0.05;
  /// Also add environment-by-covariate interactions to the tested block.
  bool interactions = false;
  void validate() const;
};

struct IcpMaskResult {
  SubsetMask mask;
  double f_statistic = 0.0;
  double p_value = 0.0;
  bool tested = false;
  bool passed = false;
};

struct IcpResult {
  SubsetMask selected;
  std::vector<IcpMaskResult> per_mask;
  std::vector<std::string> warnings;
};

/// F-test of the environment block added to the pooled regression on `mask`.
IcpMaskResult icp_test(const MultiEnvData& data, const SubsetMask& mask, const IcpConfig& cfg);

/// Intersection of passing nonempty masks; the empty mask when none pass.
IcpResult icp_run(const MultiEnvData& data, const SubsetLibrary& library, const IcpConfig& cfg);
SubsetMask icp_select(const MultiEnvData& data, const SubsetLibrary& library,
                      const IcpConfig& cfg);

}  // namespace eacs
