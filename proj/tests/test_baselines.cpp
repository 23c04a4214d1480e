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

#include "eacs/baselines.hpp"
#include "eacs/env_data.hpp"
#include "eacs/error.hpp"
#include "eacs/linear_model.hpp"

namespace eacs {
namespace {

/// Environments with y = x b + noise, no shift. Sizes cycle through `sizes`.
MultiEnvData linear_envs(int num_envs, const std::vector<int>& sizes, const Eigen::VectorXd& b,
                         double noise, std::uint64_t seed, double env_shift = 0.0) {
  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<EnvDataset> envs;
  for (int e = 0; e < num_envs; ++e) {
    const int n = sizes[static_cast<std::size_t>(e) % sizes.size()];
    EnvDataset env;
    env.env_id = "e" + std::to_string(e);
    for (Eigen::Index j = 0; j < b.size(); ++j) env.covariate_names.push_back("x" + std::to_string(j));
    env.covariates.resize(n, b.size());
    for (Eigen::Index i = 0; i < env.covariates.size(); ++i) env.covariates(i) = normal(engine);
    Eigen::VectorXd y = env.covariates * b;
    for (Eigen::Index i = 0; i < n; ++i) y(i) += noise * normal(engine) + env_shift * e;
    env.outcomes = y;
    envs.push_back(std::move(env));
  }
  return MultiEnvData(std::move(envs));
}

Eigen::VectorXd coeffs(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

TEST(Lasso, ZeroPenaltyIsOls) {
  const auto data = linear_envs(6, {30, 50}, coeffs({1.0, -2.0, 0.5}), 1.0, 1);
  const auto lasso = fit_lasso(data, LassoConfig{0.0});
  const auto ols = fit_pooled_ols(data, SubsetMask::all(3));
  EXPECT_NEAR(lasso.intercept, ols.intercept, 1e-6);
  EXPECT_LE((lasso.coefficients - ols.coefficients).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Lasso, LargePenaltyZeroesEverything) {
  const auto data = linear_envs(4, {40}, coeffs({1.0, -2.0, 0.5}), 1.0, 2);
  const Eigen::MatrixXd x = data.stacked_covariates();
  const Eigen::VectorXd y = data.stacked_outcomes();
  const auto n = static_cast<double>(x.rows());
  double lambda_max = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Eigen::ArrayXd c = x.col(j).array() - x.col(j).mean();
    const Eigen::ArrayXd z = c / std::sqrt(c.square().sum() / n);
    lambda_max = std::max(lambda_max, std::abs((z * (y.array() - y.mean())).sum() / n));
  }
  const auto at = fit_lasso(data, LassoConfig{lambda_max});
  EXPECT_EQ(at.coefficients, Eigen::VectorXd::Zero(3));
  EXPECT_NEAR(at.intercept, y.mean(), 1e-12);
  const auto below = fit_lasso(data, LassoConfig{0.99 * lambda_max});
  EXPECT_GT(below.coefficients.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lasso, SoftThresholdOnStandardizedCovariate) {
  Engine engine = make_engine(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  EnvDataset env;
  env.env_id = "e";
  env.covariate_names = {"x"};
  Eigen::VectorXd x(200);
  for (Eigen::Index i = 0; i < 200; ++i) x(i) = normal(engine);
  x.array() -= x.mean();
  x /= std::sqrt(x.squaredNorm() / 200.0);
  env.covariates = x;
  Eigen::VectorXd y(200);
  for (Eigen::Index i = 0; i < 200; ++i) y(i) = 0.7 * x(i) + normal(engine);
  env.outcomes = y;
  const MultiEnvData data({env});
  const double b_ols = x.dot(y) / 200.0;
  for (double lambda : {0.0, 0.1, 0.3, 0.6, 2.0}) {
    const double expect = std::copysign(std::max(std::abs(b_ols) - lambda, 0.0), b_ols);
    EXPECT_NEAR(fit_lasso(data, LassoConfig{lambda}).coefficients(0), expect, 1e-10);
  }
}

TEST(Lasso, ObjectiveTraceNonincreasing) {
  const auto data = linear_envs(5, {30}, coeffs({1.0, 0.0, -1.0, 0.2}), 2.0, 4);
  const auto fit = fit_lasso_path(data, LassoConfig{0.05});
  ASSERT_FALSE(fit.objective_trace.empty());
  for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
    EXPECT_LE(fit.objective_trace[k], fit.objective_trace[k - 1] + 1e-15);
  }
}

TEST(Lasso, ConvergenceFailureThrows) {
  const auto data = linear_envs(5, {30}, coeffs({1.0, 0.9, -1.0}), 1.0, 5);
  LassoConfig cfg{1e-4};
  cfg.max_iters = 1;
  cfg.tolerance = 1e-300;
  EXPECT_THROW(fit_lasso(data, cfg), NumericalError);
}

TEST(Anchor, GammaOneIsOls) {
  const auto data = linear_envs(6, {20, 35}, coeffs({1.0, -1.0}), 1.0, 6, 0.8);
  const auto a = fit_anchor(data, AnchorConfig{1.0});
  const auto ols = fit_pooled_ols(data, SubsetMask::all(2));
  EXPECT_NEAR(a.intercept, ols.intercept, 1e-8);
  EXPECT_LE((a.coefficients - ols.coefficients).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Anchor, GammaZeroPartialsOutEnvironments) {
  const auto data = linear_envs(5, {25, 40}, coeffs({2.0, 0.5}), 1.0, 7, 1.5);
  std::vector<EnvDataset> demeaned;
  for (const auto& env : data.environments()) {
    EnvDataset d = env;
    d.covariates = env.covariates.rowwise() - env.covariates.colwise().mean();
    d.outcomes = (env.y().array() - env.y().mean()).matrix();
    demeaned.push_back(d);
  }
  const MultiEnvData within(demeaned);
  const Eigen::VectorXd slope =
      min_norm_least_squares(within.stacked_covariates(), within.stacked_outcomes());
  const auto a = fit_anchor(data, AnchorConfig{0.0});
  EXPECT_LE((a.coefficients - slope).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Anchor, MinimizesItsObjective) {
  const auto data = linear_envs(6, {30}, coeffs({1.0, -0.5, 0.3}), 1.0, 8, 1.0);
  Engine engine = make_engine(9);
  std::normal_distribution<double> normal(0.0, 1e-3);
  for (double gamma : {0.2, 1.0, 5.0}) {
    const auto a = fit_anchor(data, AnchorConfig{gamma});
    const double best = anchor_objective(data, a, gamma);
    for (int trial = 0; trial < 20; ++trial) {
      LinearPredictor b = a;
      b.intercept += normal(engine);
      for (Eigen::Index j = 0; j < b.coefficients.size(); ++j) b.coefficients(j) += normal(engine);
      EXPECT_GE(anchor_objective(data, b, gamma), best);
    }
  }
}

TEST(Anchor, IdenticalEnvironmentsIgnoreGamma) {
  const auto one = linear_envs(1, {60}, coeffs({1.0, 2.0}), 1.0, 10);
  EnvDataset copy = one[0];
  copy.env_id = "copy";
  const MultiEnvData data({one[0], copy});
  const auto ref = fit_anchor(data, AnchorConfig{1.0});
  for (double gamma : {0.0, 0.3, 4.0, 50.0}) {
    const auto a = fit_anchor(data, AnchorConfig{gamma});
    EXPECT_LE((a.coefficients - ref.coefficients).cwiseAbs().maxCoeff(), 1e-8);
  }
}

/// F statistic from the dense design with explicit indicator columns.
double dense_f(const MultiEnvData& data, const SubsetMask& mask, bool interactions) {
  const Eigen::MatrixXd x = data.stacked_covariates();
  const Eigen::VectorXd y = data.stacked_outcomes();
  const auto active = mask.active();
  const auto k = static_cast<Eigen::Index>(active.size());
  const Eigen::Index n = x.rows();
  const auto envs = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd reduced(n, 1 + k);
  reduced.col(0).setOnes();
  for (Eigen::Index c = 0; c < k; ++c) reduced.col(1 + c) = x.col(active[c]);
  const Eigen::Index per = interactions ? 1 + k : 1;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, 1 + k + (envs - 1) * per);
  full.leftCols(1 + k) = reduced;
  Eigen::Index row = data[0].rows();
  for (Eigen::Index e = 1; e < envs; ++e) {
    const Eigen::Index ne = data[static_cast<std::size_t>(e)].rows();
    const Eigen::Index base = 1 + k + (e - 1) * per;
    full.block(row, base, ne, 1).setOnes();
    if (interactions) {
      for (Eigen::Index c = 0; c < k; ++c) {
        full.block(row, base + 1 + c, ne, 1) = x.block(row, active[c], ne, 1);
      }
    }
    row += ne;
  }
  auto fit = [&](const Eigen::MatrixXd& d, Eigen::Index& rank) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(d);
    rank = cod.rank();
    return (y - d * cod.solve(y)).squaredNorm();
  };
  Eigen::Index r0 = 0;
  Eigen::Index r1 = 0;
  const double rss0 = fit(reduced, r0);
  const double rss1 = fit(full, r1);
  return ((rss0 - rss1) / static_cast<double>(r1 - r0)) / (rss1 / static_cast<double>(n - r1));
}

TEST(Icp, BlockwiseFMatchesDenseDesign) {
  const auto data = linear_envs(7, {9, 15, 22}, coeffs({1.0, -0.5, 0.0}), 1.0, 11, 0.3);
  for (bool interactions : {false, true}) {
    IcpConfig cfg;
    cfg.interactions = interactions;
    for (const auto& bits : {"100", "011", "111"}) {
      const auto mask = SubsetMask::from_bits(bits);
      const auto r = icp_test(data, mask, cfg);
      ASSERT_TRUE(r.tested);
      const double f = dense_f(data, mask, interactions);
      EXPECT_NEAR(r.f_statistic, f, 1e-8 * std::max(1.0, f)) << bits << " " << interactions;
      EXPECT_GE(r.p_value, 0.0);
      EXPECT_LE(r.p_value, 1.0);
    }
  }
}

TEST(Icp, TrueSupportPassesAtNominalRate) {
  const auto b = coeffs({1.0, 0.0});
  const auto mask = SubsetMask::from_bits("10");
  int passed = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    const auto data = linear_envs(5, {40}, b, 1.0, 1000 + rep);
    passed += icp_test(data, mask, IcpConfig{}).passed;
  }
  EXPECT_NEAR(static_cast<double>(passed) / reps, 0.95, 0.03);
}

TEST(Icp, SinglePassingMaskReturnedVerbatim) {
  const auto data = linear_envs(4, {30}, coeffs({1.0, 1.0}), 1.0, 12);
  const SubsetLibrary lib({SubsetMask::from_bits("11")});
  IcpConfig cfg;
  cfg.alpha_threshold = 1e-12;
  EXPECT_EQ(icp_select(data, lib, cfg), SubsetMask::from_bits("11"));
}

TEST(Icp, NoPassingMaskGivesEmpty) {
  const auto data = linear_envs(4, {30}, coeffs({1.0, 1.0}), 1.0, 13, 5.0);
  const auto r = icp_run(data, build_library(2), IcpConfig{});
  for (const auto& m : r.per_mask) EXPECT_FALSE(m.passed);
  EXPECT_EQ(r.selected, SubsetMask::none(2));
}

TEST(Icp, IntersectionOfPassingMasks) {
  const auto data = linear_envs(5, {60}, coeffs({1.0, 0.0}), 1.0, 14);
  IcpConfig cfg;
  cfg.alpha_threshold = 1e-12;
  const auto r = icp_run(data, build_library(2), cfg);
  EXPECT_EQ(r.per_mask.size(), 3u);
  EXPECT_EQ(r.selected, SubsetMask::none(2));
}

TEST(Icp, InsufficientDegreesOfFreedomWarns) {
  const auto data = linear_envs(3, {2}, coeffs({1.0, 1.0}), 1.0, 15);
  IcpConfig cfg;
  cfg.interactions = true;
  const auto r = icp_run(data, build_library(2), cfg);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.selected, SubsetMask::none(2));
}

TEST(Icp, NeedsTwoEnvironments) {
  const auto data = linear_envs(1, {20}, coeffs({1.0}), 1.0, 16);
  EXPECT_THROW(icp_test(data, SubsetMask::all(1), IcpConfig{}), InvalidArgument);
}

}  // namespace
}  // namespace eacs
