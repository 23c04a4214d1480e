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

#include <optional>
#include <string>

#include <Eigen/Core>

#include "eacs/env_data.hpp"
#include "eacs/linear_model.hpp"

namespace eacs {

/// Pooled coefficient of X and the environment's covariate moments.
struct AnalyticRuleParams {
  double beta3 = 0.5;
  double s2 = 1.0;
  double s3 = 1.0;
  double r = 0.0;

  void validate() const;
};

/// Delta = 2 beta3 - beta3^2 (s3^2 - s2^2). Positive favours {C2, X}.
double risk_difference(const AnalyticRuleParams& params);

struct VarianceThreshold {
  double value = 0.0;  // 2 / beta3 when defined
  bool defined = false;
};

/// {C2} wins when s3^2 - s2^2 exceeds 2 / beta3; undefined for beta3 <= 0.
VarianceThreshold variance_threshold(double beta3);

/// Variance form. Returns false (never prefer) when the threshold is undefined.
bool prefer_causal_only(const AnalyticRuleParams& params);

/// |r| < sqrt(1 - 2 / (beta3 s3^2)). Empty when beta3 <= 0 or the radicand
/// is negative.
std::optional<bool> prefer_causal_only_corr(const AnalyticRuleParams& params);

enum class Preference { kCausalOnly, kFull, kIndifferent };
std::string to_string(Preference preference);

/// |Delta| < 1e-9 is indifferent.
Preference preferred_subset(const AnalyticRuleParams& params);

/// Mean and covariance of (C2, X, Y) in one running-example environment.
struct PopulationMoments {
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;

  double s2() const;
  double s3() const;
  double r() const;
};

PopulationMoments population_moments(const PerturbationSpec& perturb, double outcome_sd = 1.0);

/// Pooled population fits of Y on C2 (slope alpha) and on (C2, X)
/// (beta2, beta3), each with its own intercept.
struct PooledCoefficients {
  double alpha = 0.0;
  double alpha_intercept = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta_intercept = 0.0;
};

/// Solves the normal equations for the given moments.
PooledCoefficients pooled_coefficients_closed_form(const PopulationMoments& moments);
/// Base-population fit: (1, 1.5, 0.5), with beta2 - beta3 = 1.
PooledCoefficients pooled_coefficients_closed_form();

/// E[(Y - f(C2, X))^2] in the environment, in closed form.
double population_risk(const LinearPredictor& predictor, const PerturbationSpec& perturb,
                       double outcome_sd = 1.0);

/// Analytic parameters for an environment given a pooled beta3.
AnalyticRuleParams analytic_params(const PerturbationSpec& perturb, double beta3);

}  // namespace eacs
