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

#include "eacs/analytic.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "eacs/error.hpp"

namespace eacs {

void AnalyticRuleParams::validate() const {
  if (!(s2 > 0.0) || !(s3 > 0.0)) throw InvalidArgument("analytic: s2 and s3 must be > 0");
  if (!(std::abs(r) <= 1.0)) throw InvalidArgument("analytic: |r| must be <= 1");
  if (!std::isfinite(beta3)) throw InvalidArgument("analytic: beta3 must be finite");
}

double risk_difference(const AnalyticRuleParams& params) {
  params.validate();
  const double b = params.beta3;
  return 2.0 * b - b * b * (params.s3 * params.s3 - params.s2 * params.s2);
}

VarianceThreshold variance_threshold(double beta3) {
  if (!(beta3 > 0.0)) return {};
  return {2.0 / beta3, true};
}

bool prefer_causal_only(const AnalyticRuleParams& params) {
  params.validate();
  const auto t = variance_threshold(params.beta3);
  if (!t.defined) return false;
  return params.s3 * params.s3 - params.s2 * params.s2 > t.value;
}

std::optional<bool> prefer_causal_only_corr(const AnalyticRuleParams& params) {
  params.validate();
  if (!(params.beta3 > 0.0)) return std::nullopt;
  const double radicand = 1.0 - 2.0 / (params.beta3 * params.s3 * params.s3);
  if (radicand < 0.0) return std::nullopt;
  return std::abs(params.r) < std::sqrt(radicand);
}

std::string to_string(Preference preference) {
  switch (preference) {
    case Preference::kCausalOnly:
      return "causal_only";
    case Preference::kFull:
      return "full";
    case Preference::kIndifferent:
      break;
  }
  return "indifferent";
}

Preference preferred_subset(const AnalyticRuleParams& params) {
  const double delta = risk_difference(params);
  if (std::abs(delta) < 1e-9) return Preference::kIndifferent;
  return delta > 0.0 ? Preference::kFull : Preference::kCausalOnly;
}

double PopulationMoments::s2() const { return std::sqrt(cov(0, 0)); }
double PopulationMoments::s3() const { return std::sqrt(cov(1, 1)); }
double PopulationMoments::r() const { return cov(0, 1) / (s2() * s3()); }

namespace {

// (C2, X, Y) as mean + L * z over independent standard sources
// z = (C1, C2, eps_X, eps_Y, extra).
struct LinearRep {
  Eigen::Vector3d mean;
  Eigen::Matrix<double, 3, 5> load;
};

LinearRep represent(const PerturbationSpec& perturb, double outcome_sd) {
  perturb.validate();
  if (!(outcome_sd > 0.0)) throw InvalidArgument("outcome_sd must be > 0");
  const double level = perturb.effective_level();
  const double shift = perturb.target == PerturbationTarget::kC1MeanShift ? level : 0.0;
  const double c2n = perturb.target == PerturbationTarget::kC2AddNoise ? level : 0.0;
  const double xn = perturb.target == PerturbationTarget::kXAddNoise ? level : 0.0;
  LinearRep rep;
  rep.mean << 0.0, shift, shift;
  //          C1    C2    eX    eY          extra
  rep.load << 0.0, 1.0, 0.0, 0.0, c2n,               // C2
      1.0, -1.0, 1.0, 0.0, -c2n + xn,                 // X
      1.0, 1.0, 0.0, outcome_sd, c2n;                 // Y
  return rep;
}

}  // namespace

PopulationMoments population_moments(const PerturbationSpec& perturb, double outcome_sd) {
  const LinearRep rep = represent(perturb, outcome_sd);
  return {rep.mean, rep.load * rep.load.transpose()};
}

PooledCoefficients pooled_coefficients_closed_form(const PopulationMoments& m) {
  PooledCoefficients out;
  if (!(m.cov(0, 0) > 0.0)) throw NumericalError("pooled coefficients: Var(C2) is zero");
  out.alpha = m.cov(0, 2) / m.cov(0, 0);
  out.alpha_intercept = m.mean(2) - out.alpha * m.mean(0);
  const Eigen::Matrix2d sxx = m.cov.topLeftCorner<2, 2>();
  const double det = sxx.determinant();
  if (!(std::abs(det) > 1e-12)) throw NumericalError("pooled coefficients: singular moment matrix");
  const Eigen::Vector2d beta = sxx.inverse() * m.cov.block<2, 1>(0, 2);
  out.beta2 = beta(0);
  out.beta3 = beta(1);
  out.beta_intercept = m.mean(2) - beta.dot(m.mean.head<2>());
  return out;
}

PooledCoefficients pooled_coefficients_closed_form() {
  return pooled_coefficients_closed_form(population_moments(PerturbationSpec{}));
}

double population_risk(const LinearPredictor& predictor, const PerturbationSpec& perturb,
                       double outcome_sd) {
  predictor.validate();
  if (predictor.mask.size() != 2) {
    throw InvalidArgument("population_risk: predictor must span (C2, X)");
  }
  const LinearRep rep = represent(perturb, outcome_sd);
  const Eigen::VectorXd b = predictor.full_coefficients();
  // residual = Y - intercept - b0 C2 - b1 X
  const Eigen::Matrix<double, 1, 5> load = rep.load.row(2) - b(0) * rep.load.row(0) -
                                           b(1) * rep.load.row(1);
  const double bias = rep.mean(2) - predictor.intercept - b(0) * rep.mean(0) - b(1) * rep.mean(1);
  return bias * bias + load.squaredNorm();
}

AnalyticRuleParams analytic_params(const PerturbationSpec& perturb, double beta3) {
  const PopulationMoments m = population_moments(perturb);
  return {beta3, m.s2(), m.s3(), m.r()};
}

}  // namespace eacs
