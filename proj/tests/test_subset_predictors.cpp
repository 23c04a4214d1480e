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

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "eacs/analytic.hpp"
#include "eacs/env_data.hpp"
#include "eacs/error.hpp"
#include "eacs/linear_model.hpp"
#include "eacs/risk.hpp"
#include "eacs/subsets.hpp"

namespace eacs {
namespace {

TEST(Library, AllSixteenMasksForFourCovariates) {
  const auto lib = build_library(4);
  ASSERT_EQ(lib.size(), 16u);
  EXPECT_EQ(lib[0].count(), 0u);
  EXPECT_EQ(lib[15].count(), 4u);
  for (std::size_t k = 1; k < lib.size(); ++k) {
    EXPECT_TRUE(library_order_less(lib[k - 1], lib[k]));
  }
}

TEST(Library, TwoCovariateOrder) {
  const auto lib = build_library(2);
  const std::vector<std::string> names{"C2", "X"};
  ASSERT_EQ(lib.size(), 4u);
  EXPECT_EQ(lib[0].label(names), "{}");
  EXPECT_EQ(lib[1].label(names), "{C2}");
  EXPECT_EQ(lib[2].label(names), "{X}");
  EXPECT_EQ(lib[3].label(names), "{C2,X}");
}

TEST(Library, CausalConstraint) {
  const auto lib = build_library(2, {0});
  ASSERT_EQ(lib.size(), 2u);
  EXPECT_EQ(lib[0].bit_string(), "10");
  EXPECT_EQ(lib[1].bit_string(), "11");
  const auto all = build_library(3, {0, 1, 2});
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0], SubsetMask::all(3));
}

TEST(Library, ConstrainedMasksContainS) {
  for (std::size_t p = 1; p <= 6; ++p) {
    for (int s = 0; s < static_cast<int>(p); ++s) {
      const std::vector<int> constraint{s};
      const auto lib = build_library(p, constraint);
      for (const auto& m : lib.masks()) {
        EXPECT_TRUE(m.contains_all(constraint));
      }
    }
  }
}

TEST(Library, InvalidConstraintThrows) {
  EXPECT_THROW(build_library(2, {2}), InvalidArgument);
}

TEST(Ols, EmptyMaskIsPooledMean) {
  GridSpec g;
  g.per_type_count = 3;
  g.n = 40;
  const auto data = generate_environment_grid(g, 1.0, 2);
  const auto p = fit_pooled_ols(data, SubsetMask::none(2));
  EXPECT_EQ(p.coefficients.size(), 0);
  EXPECT_NEAR(p.intercept, data.stacked_outcomes().mean(), 1e-12);
}

TEST(Ols, BasePopulationCoefficients) {
  const auto env = generate_running_example({}, 1'000'000, 1.0, 3);
  const MultiEnvData data({env});
  const auto causal = fit_pooled_ols(data, SubsetMask::from_bits("10"));
  EXPECT_NEAR(causal.coefficients(0), 1.0, 0.01);
  const auto full = fit_pooled_ols(data, SubsetMask::all(2));
  EXPECT_NEAR(full.coefficients(0), 1.5, 0.01);
  EXPECT_NEAR(full.coefficients(1), 0.5, 0.01);
}

TEST(Ols, NormalEquationsOracle) {
  // Cov(Y,C2)=1, Cov(Y,X)=0, Var(C2)=1, Var(X)=3, Cov(C2,X)=-1.
  Eigen::Matrix2d s;
  s << 1, -1, -1, 3;
  const Eigen::Vector2d beta = s.inverse() * Eigen::Vector2d(1, 0);
  EXPECT_NEAR(beta(0), 1.5, 1e-15);
  EXPECT_NEAR(beta(1), 0.5, 1e-15);
  EXPECT_NEAR(beta(0) - beta(1), 1.0, 1e-15);
}

TEST(Ols, ResidualOrthogonality) {
  Engine engine = make_engine(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double scale = std::pow(10.0, trial - 4);
    Eigen::MatrixXd x(200, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = scale * normal(engine);
    Eigen::VectorXd y(200);
    for (Eigen::Index i = 0; i < 200; ++i) y(i) = x.row(i).sum() + scale * normal(engine);
    const auto mask = SubsetMask::from_bits("1101");
    const auto p = fit_ols(x, y, mask);
    const Eigen::VectorXd r = y - p.predict(x);
    const double data_scale = x.norm() * y.norm();
    EXPECT_LE(std::abs(r.sum()), 1e-8 * y.norm() * std::sqrt(200.0));
    for (auto j : mask.active()) {
      EXPECT_LE(std::abs(x.col(j).dot(r)), 1e-8 * data_scale);
    }
  }
}

TEST(Ols, RankDeficientIsMinimumNorm) {
  Engine engine = make_engine(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(50, 2);
  for (Eigen::Index i = 0; i < 50; ++i) {
    x(i, 0) = normal(engine);
    x(i, 1) = x(i, 0);
  }
  const Eigen::VectorXd y = 2.0 * x.col(0);
  const auto p = fit_ols(x, y, SubsetMask::all(2));
  EXPECT_NEAR(p.coefficients(0), 1.0, 1e-10);
  EXPECT_NEAR(p.coefficients(1), 1.0, 1e-10);
}

TEST(Risk, ExactPredictorHasZeroRisk) {
  const auto env = generate_running_example({}, 30, 1.0, 6);
  LinearPredictor p;
  p.mask = SubsetMask::all(2);
  p.coefficients = Eigen::Vector2d(0, 0);
  EnvDataset copy = env;
  copy.outcomes = Eigen::VectorXd::Constant(30, 0.0);
  EXPECT_EQ(empirical_risk(copy, p), 0.0);
}

TEST(Risk, InterceptOnlyIsBiasedVariance) {
  const auto env = generate_running_example({}, 37, 1.0, 7);
  LinearPredictor p;
  p.mask = SubsetMask::none(2);
  p.intercept = env.y().mean();
  const double var = (env.y().array() - env.y().mean()).square().sum() / 37.0;
  EXPECT_NEAR(empirical_risk(env, p), var, 1e-12);
}

TEST(Risk, CausalPredictorPopulationRisk) {
  const auto env = generate_running_example({}, 1'000'000, 1.0, 8);
  LinearPredictor p;
  p.mask = SubsetMask::from_bits("10");
  p.coefficients = Eigen::VectorXd::Ones(1);
  EXPECT_NEAR(empirical_risk(env, p), 2.0, 0.02);
}

RiskTable table_from(const Eigen::MatrixXd& risks) {
  RiskTable t;
  t.library = build_library(static_cast<std::size_t>(std::log2(risks.cols())));
  t.risks = risks;
  for (Eigen::Index e = 0; e < risks.rows(); ++e) {
    t.env_ids.push_back("e" + std::to_string(e));
    t.labels.push_back(argmin_earliest(risks.row(e)));
  }
  return t;
}

TEST(RiskTable, SymmetricTieBreak) {
  Eigen::MatrixXd r(2, 2);
  r << 1, 2, 2, 1;
  const auto t = table_from(r);
  EXPECT_EQ(best_fixed_index(t), 0u);
  EXPECT_DOUBLE_EQ(t.risks.col(0).mean(), 1.5);
}

TEST(RiskTable, SingleEnvironmentBestFixedIsOracle) {
  Engine engine = make_engine(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd r(1, 4);
    for (Eigen::Index k = 0; k < 4; ++k) r(0, k) = u(engine);
    const auto t = table_from(r);
    EXPECT_EQ(static_cast<int>(best_fixed_index(t)), t.labels[0]);
  }
}

TEST(RiskTable, IdenticalPredictorsLabelZero) {
  GridSpec g;
  g.per_type_count = 2;
  g.n = 20;
  const auto data = generate_environment_grid(g, 1.0, 10);
  const SubsetLibrary lib({SubsetMask::from_bits("10"), SubsetMask::all(2)});
  LinearPredictor a;
  a.mask = lib[0];
  a.coefficients = Eigen::VectorXd::Ones(1);
  LinearPredictor b;
  b.mask = lib[1];
  b.coefficients = Eigen::Vector2d(1.0, 0.0);
  const auto t = build_risk_table(data, lib, {a, b});
  EXPECT_EQ(t.risks.col(0), t.risks.col(1));
  for (int l : t.labels) EXPECT_EQ(l, 0);
}

TEST(RiskTable, SingletonLibrary) {
  GridSpec g;
  g.per_type_count = 2;
  g.n = 20;
  const auto data = generate_environment_grid(g, 1.0, 11);
  const SubsetLibrary lib({SubsetMask::from_bits("10")});
  const auto t = build_risk_table(data, lib, fit_library(data, lib));
  for (int l : t.labels) EXPECT_EQ(l, 0);
}

TEST(RiskTable, OracleIsRowMinimum) {
  GridSpec g;
  g.per_type_count = 10;
  g.n = 30;
  const auto data = generate_environment_grid(g, 1.0, 12);
  const auto lib = build_library(2);
  const auto t = build_risk_table(data, lib, fit_library(data, lib));
  ASSERT_EQ(t.num_envs(), data.size());
  for (std::size_t e = 0; e < t.num_envs(); ++e) {
    const auto row = static_cast<Eigen::Index>(e);
    EXPECT_LE(oracle_risk(t, e), t.risks.row(row).minCoeff());
    EXPECT_GE(oracle_risk(t, e), t.risks.row(row).minCoeff());
    EXPECT_EQ(t.risks(row, t.labels[e]), oracle_risk(t, e));
  }
}

TEST(RiskTable, LargeXNoiseFavorsCausalSubset) {
  const auto base = generate_running_example({}, 200'000, 1.0, 13);
  const MultiEnvData train({base});
  const SubsetLibrary lib({SubsetMask::from_bits("10"), SubsetMask::all(2)}, {0});
  const auto predictors = fit_library(train, lib);
  std::vector<EnvDataset> tests;
  Engine engine = make_engine(14);
  for (int k = 0; k < 5; ++k) {
    tests.push_back(generate_running_example({PerturbationTarget::kXAddNoise, 4.0}, 5'000, 1.0,
                                             engine, "t" + std::to_string(k)));
  }
  const auto t = build_risk_table(MultiEnvData(tests), lib, predictors);
  for (int l : t.labels) EXPECT_EQ(l, 0);
}

}  // namespace
}  // namespace eacs
