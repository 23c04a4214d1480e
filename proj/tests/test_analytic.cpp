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

#include <cmath>

#include <gtest/gtest.h>

#include "eacs/analytic.hpp"
#include "eacs/env_data.hpp"
#include "eacs/error.hpp"
#include "eacs/linear_model.hpp"

namespace eacs {
namespace {

LinearPredictor causal_predictor(const PooledCoefficients& c) {
  LinearPredictor p;
  p.mask = SubsetMask::from_bits("10");
  p.intercept = c.alpha_intercept;
  p.coefficients = Eigen::VectorXd::Constant(1, c.alpha);
  return p;
}

LinearPredictor full_predictor(const PooledCoefficients& c) {
  LinearPredictor p;
  p.mask = SubsetMask::all(2);
  p.intercept = c.beta_intercept;
  p.coefficients = Eigen::Vector2d(c.beta2, c.beta3);
  return p;
}

TEST(RiskDifference, BasePopulation) {
  EXPECT_DOUBLE_EQ(risk_difference({0.5, 1.0, std::sqrt(3.0), 0.0}), 0.5);
}

TEST(RiskDifference, ZeroBetaIsZero) {
  for (double s3 : {0.5, 1.0, 7.0}) EXPECT_EQ(risk_difference({0.0, 1.3, s3, 0.0}), 0.0);
}

TEST(RiskDifference, LargeXNoiseFlipsSign) {
  const AnalyticRuleParams a{0.5, 1.0, std::sqrt(7.0), 0.0};
  EXPECT_NEAR(risk_difference(a), -0.5, 1e-12);
  EXPECT_EQ(preferred_subset(a), Preference::kCausalOnly);
  EXPECT_TRUE(prefer_causal_only(a));
}

TEST(RiskDifference, MatchesMonteCarloRisks) {
  const auto coef = pooled_coefficients_closed_form();
  for (const PerturbationSpec perturb :
       {PerturbationSpec{}, PerturbationSpec{PerturbationTarget::kXAddNoise, 2.0}}) {
    const auto env = generate_running_example(perturb, 1'000'000, 1.0, 60);
    const double mc = empirical_risk(env, causal_predictor(coef)) -
                      empirical_risk(env, full_predictor(coef));
    EXPECT_NEAR(risk_difference(analytic_params(perturb, coef.beta3)), mc, 0.05);
  }
}

TEST(Threshold, DefinedForPositiveBeta) {
  const auto t = variance_threshold(0.5);
  EXPECT_TRUE(t.defined);
  EXPECT_DOUBLE_EQ(t.value, 4.0);
  EXPECT_FALSE(variance_threshold(0.0).defined);
  EXPECT_FALSE(variance_threshold(-1.0).defined);
  EXPECT_FALSE(prefer_causal_only({-1.0, 1.0, 100.0, 0.0}));
}

TEST(Threshold, CrossoverAtRootTwo) {
  const double star = std::sqrt(2.0);
  const auto below = analytic_params({PerturbationTarget::kXAddNoise, star - 1e-6}, 0.5);
  const auto above = analytic_params({PerturbationTarget::kXAddNoise, star + 1e-6}, 0.5);
  const auto at = analytic_params({PerturbationTarget::kXAddNoise, star}, 0.5);
  EXPECT_GT(risk_difference(below), 0.0);
  EXPECT_LT(risk_difference(above), 0.0);
  EXPECT_NEAR(risk_difference(at), 0.0, 1e-12);
  EXPECT_EQ(preferred_subset(at), Preference::kIndifferent);
}

TEST(Threshold, ShiftAndC2NoiseNeverFlip) {
  for (double d = 0.0; d <= 10.0; d += 0.25) {
    for (auto t : {PerturbationTarget::kC1MeanShift, PerturbationTarget::kC2AddNoise}) {
      const auto a = analytic_params({t, d}, 0.5);
      EXPECT_NEAR(a.s3 * a.s3 - a.s2 * a.s2, 2.0, 1e-12);
      EXPECT_EQ(preferred_subset(a), Preference::kFull);
    }
  }
}

TEST(Threshold, CorrelationFormAgreesWithVarianceForm) {
  for (double d = 0.0; d <= 4.0; d += 0.1) {
    for (auto t : kGridTargets) {
      const auto a = analytic_params({t, d}, 0.5);
      const auto corr = prefer_causal_only_corr(a);
      if (!corr || std::abs(risk_difference(a)) < 1e-9) continue;
      EXPECT_EQ(*corr, prefer_causal_only(a)) << to_string(t) << " " << d;
    }
  }
}

TEST(Moments, BaseClosedForms) {
  const auto m = population_moments({});
  EXPECT_DOUBLE_EQ(m.s2(), 1.0);
  EXPECT_NEAR(m.s3(), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(m.r(), -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(m.r(), -m.s2() / m.s3(), 1e-15);
}

TEST(Moments, MatchMonteCarlo) {
  const PerturbationSpec perturb{PerturbationTarget::kC2AddNoise, 1.5};
  const auto m = population_moments(perturb, 2.0);
  const auto env = generate_running_example(perturb, 1'000'000, 2.0, 61);
  Eigen::MatrixXd z(env.rows(), 3);
  z << env.covariates, env.y();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::MatrixXd c = z.rowwise() - mean;
  const Eigen::Matrix3d cov = c.transpose() * c / static_cast<double>(z.rows());
  EXPECT_LE((cov - m.cov).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LE((mean.transpose() - m.mean).cwiseAbs().maxCoeff(), 0.01);
}

TEST(PooledCoefficients, BaseValues) {
  const auto c = pooled_coefficients_closed_form();
  EXPECT_NEAR(c.alpha, 1.0, 1e-14);
  EXPECT_NEAR(c.beta2, 1.5, 1e-14);
  EXPECT_NEAR(c.beta3, 0.5, 1e-14);
  EXPECT_NEAR(c.beta2 - c.beta3, 1.0, 1e-14);
}

TEST(PooledCoefficients, AgreeWithLargeSampleOls) {
  const auto c = pooled_coefficients_closed_form();
  const MultiEnvData data({generate_running_example({}, 1'000'000, 1.0, 62)});
  const auto full = fit_pooled_ols(data, SubsetMask::all(2));
  EXPECT_NEAR(full.coefficients(0), c.beta2, 0.01);
  EXPECT_NEAR(full.coefficients(1), c.beta3, 0.01);
}

TEST(PooledCoefficients, DiagonalSystemDecouples) {
  PopulationMoments m;
  m.mean.setZero();
  m.cov << 2.0, 0.0, 0.7, 0.0, 2.0, 0.3, 0.7, 0.3, 5.0;
  const auto c = pooled_coefficients_closed_form(m);
  EXPECT_NEAR(c.beta2, 0.35, 1e-15);
  EXPECT_NEAR(c.beta3, 0.15, 1e-15);
  EXPECT_NEAR(c.alpha, 0.35, 1e-15);
}

TEST(PopulationRisk, MatchesMonteCarlo) {
  const auto c = pooled_coefficients_closed_form();
  EXPECT_NEAR(population_risk(causal_predictor(c), {}), 2.0, 1e-12);
  EXPECT_NEAR(population_risk(full_predictor(c), {}), 1.5, 1e-12);
  const PerturbationSpec shift{PerturbationTarget::kC1MeanShift, 2.0};
  const auto env = generate_running_example(shift, 1'000'000, 1.0, 63);
  EXPECT_NEAR(population_risk(full_predictor(c), shift), empirical_risk(env, full_predictor(c)),
              0.02);
}

// Sign of the analytic difference against Monte-Carlo risks of the base-pooled
// predictors on a 9 x 3 grid.
TEST(AnalyticRule, SignMatchesMonteCarloGrid) {
  const auto c = pooled_coefficients_closed_form();
  int checked = 0;
  std::uint64_t seed = 70;
  for (auto t : kGridTargets) {
    for (int k = 0; k <= 8; ++k) {
      const PerturbationSpec perturb{t, 0.5 * k};
      const double delta = risk_difference(analytic_params(perturb, c.beta3));
      if (std::abs(delta) <= 0.1) continue;
      const auto env = generate_running_example(perturb, 100'000, 1.0, seed++);
      const double mc = empirical_risk(env, causal_predictor(c)) -
                        empirical_risk(env, full_predictor(c));
      EXPECT_EQ(delta > 0, mc > 0) << to_string(t) << " delta=" << perturb.level;
      ++checked;
    }
  }
  EXPECT_GE(checked, 25);
}

TEST(AnalyticRule, RejectsInvalidParams) {
  EXPECT_THROW(risk_difference({0.5, -1.0, 1.0, 0.0}), InvalidArgument);
}

}  // namespace
}  // namespace eacs
