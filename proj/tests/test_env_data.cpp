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
#include <sstream>

#include <gtest/gtest.h>

#include "eacs/csv.hpp"
#include "eacs/env_data.hpp"
#include "eacs/error.hpp"

namespace eacs {
namespace {

double column_variance(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().mean();
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

TEST(RunningExample, BasePopulationMoments) {
  const auto env = generate_running_example({}, 1'000'000, 1.0, 11);
  EXPECT_NEAR(column_variance(env.covariates.col(1)), 3.0, 0.03);
  EXPECT_NEAR(column_variance(env.covariates.col(0)), 1.0, 0.01);
  EXPECT_NEAR(correlation(env.covariates.col(0), env.covariates.col(1)), -1.0 / std::sqrt(3.0),
              0.01);
}

TEST(RunningExample, MeanShiftLeavesVariances) {
  const auto env =
      generate_running_example({PerturbationTarget::kC1MeanShift, 3.0}, 1'000'000, 1.0, 12);
  EXPECT_NEAR(column_variance(env.covariates.col(1)), 3.0, 0.03);
  EXPECT_NEAR(column_variance(env.covariates.col(0)), 1.0, 0.01);
  EXPECT_NEAR(env.covariates.col(1).mean(), 3.0, 0.01);
  EXPECT_NEAR(env.y().mean(), 3.0, 0.01);
}

TEST(RunningExample, XNoiseAddsVariance) {
  const auto env =
      generate_running_example({PerturbationTarget::kXAddNoise, 2.0}, 1'000'000, 1.0, 13);
  const double s3sq = column_variance(env.covariates.col(1));
  const double s2sq = column_variance(env.covariates.col(0));
  EXPECT_NEAR(s3sq, 7.0, 0.07);
  EXPECT_NEAR(s3sq - s2sq, 6.0, 0.07);
}

TEST(RunningExample, C2NoisePropagatesToOutcome) {
  // Added C2 noise flows through X and Y, so Var(X) - Var(C2) stays 2.
  const auto env =
      generate_running_example({PerturbationTarget::kC2AddNoise, 2.0}, 1'000'000, 1.0, 14);
  const double s3sq = column_variance(env.covariates.col(1));
  const double s2sq = column_variance(env.covariates.col(0));
  EXPECT_NEAR(s2sq, 5.0, 0.05);
  EXPECT_NEAR(s3sq - s2sq, 2.0, 0.05);
  EXPECT_NEAR(column_variance(env.y()), 1.0 + 5.0 + 1.0, 0.1);
}

TEST(RunningExample, OutcomeNoiseScale) {
  const auto env = generate_running_example({}, 400'000, 10.0, 15);
  EXPECT_NEAR(column_variance(env.y()), 102.0, 1.0);
}

TEST(RunningExample, RejectsBadArguments) {
  EXPECT_THROW(generate_running_example({}, 0, 1.0, 1), InvalidArgument);
  EXPECT_THROW(generate_running_example({}, 5, 0.0, 1), InvalidArgument);
  EXPECT_THROW(generate_running_example({PerturbationTarget::kXAddNoise, -1.0}, 5, 1.0, 1),
               InvalidArgument);
}

TEST(EnvironmentGrid, DefaultShape) {
  const auto data = generate_environment_grid(GridSpec{}, 1.0, 3);
  ASSERT_EQ(data.size(), 300u);
  for (const auto& env : data.environments()) {
    EXPECT_EQ(env.rows(), 100);
    EXPECT_TRUE(env.has_outcomes());
    ASSERT_TRUE(env.perturbation.has_value());
    EXPECT_GE(env.perturbation->level, 0.0);
    EXPECT_LE(env.perturbation->level, 4.0);
  }
  EXPECT_EQ(data[0].perturbation->target, PerturbationTarget::kC1MeanShift);
  EXPECT_EQ(data[100].perturbation->target, PerturbationTarget::kC2AddNoise);
  EXPECT_EQ(data[299].perturbation->target, PerturbationTarget::kXAddNoise);
}

TEST(EnvironmentGrid, ZeroLevelsCoincide) {
  GridSpec g;
  g.per_type_count = 1;
  g.levels.grid = {0.0};
  g.n = 50'000;
  const auto data = generate_environment_grid(g, 1.0, 4);
  ASSERT_EQ(data.size(), 3u);
  for (const auto& env : data.environments()) {
    EXPECT_EQ(env.perturbation->level, 0.0);
    EXPECT_NEAR(column_variance(env.covariates.col(1)), 3.0, 0.1);
    EXPECT_NEAR(env.covariates.col(1).mean(), 0.0, 0.03);
  }
}

TEST(EnvironmentGrid, Deterministic) {
  GridSpec g;
  g.per_type_count = 7;
  g.n = 13;
  const auto a = generate_environment_grid(g, 2.0, 99, 5);
  const auto b = generate_environment_grid(g, 2.0, 99, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t e = 0; e < a.size(); ++e) {
    EXPECT_EQ(a[e].covariates, b[e].covariates);
    EXPECT_EQ(a[e].y(), b[e].y());
  }
  const auto c = generate_environment_grid(g, 2.0, 99, 6);
  EXPECT_NE(a[0].covariates, c[0].covariates);
}

TEST(EnvironmentGrid, SmallerGridsArePrefixes) {
  GridSpec small;
  small.per_type_count = 3;
  small.n = 20;
  GridSpec big = small;
  big.per_type_count = 10;
  big.n = 50;
  const auto a = generate_environment_grid(small, 1.0, 8);
  const auto b = generate_environment_grid(big, 1.0, 8);
  for (int t = 0; t < 3; ++t) {
    for (int k = 0; k < 3; ++k) {
      const auto& ea = a[static_cast<std::size_t>(3 * t + k)];
      const auto& eb = b[static_cast<std::size_t>(10 * t + k)];
      EXPECT_EQ(ea.perturbation->level, eb.perturbation->level);
      EXPECT_EQ(ea.covariates, eb.covariates.topRows(20));
    }
  }
}

TEST(EnvironmentGrid, TrainAndTestStreamsDiffer) {
  GridSpec g;
  g.per_type_count = 2;
  g.n = 5;
  const auto grids = generate_train_test(g, g, NoiseConfig{}, 1, 0);
  EXPECT_NE(grids.train[0].covariates, grids.test[0].covariates);
  EXPECT_NE(grids.train[0].env_id, grids.test[0].env_id);
}

TEST(MultiEnv, RejectsSchemaMismatch) {
  EnvDataset a;
  a.env_id = "a";
  a.covariates = Eigen::MatrixXd::Zero(2, 2);
  a.covariate_names = {"u", "v"};
  EnvDataset b = a;
  b.env_id = "b";
  b.covariate_names = {"u", "w"};
  EXPECT_THROW(MultiEnvData({a, b}), DataError);
  b = a;
  EXPECT_THROW(MultiEnvData({a, b}), DataError);
  b.env_id = "b";
  b.outcomes = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(MultiEnvData({a, b}), DataError);
}

TEST(Csv, ParsesTwoEnvironments) {
  std::istringstream in(
      "env,a,b,y\n"
      "e1,1,2,3\n"
      "e2,4,5,6\n"
      "e1,7,8,9\n"
      "e2,1,1,1\n"
      "e1,0,0,0\n"
      "e2,2,2,2\n");
  const auto data = parse_multi_env_csv(in, "env", std::string("y"));
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].env_id, "e1");
  EXPECT_EQ(data[0].rows(), 3);
  EXPECT_EQ(data[1].rows(), 3);
  EXPECT_EQ(data.covariate_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(data[0].covariates(1, 0), 7.0);
  EXPECT_DOUBLE_EQ(data[1].y()(2), 2.0);
}

TEST(Csv, EnvColumnOnlyIsAnError) {
  std::istringstream in("env\ne1\n");
  try {
    parse_multi_env_csv(in, "env", std::nullopt);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no covariate columns"), std::string::npos);
  }
}

TEST(Csv, ReportsBadCellCoordinates) {
  std::istringstream in("env,a\ne1,1\ne1,oops\n");
  try {
    parse_multi_env_csv(in, "env", std::nullopt);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
}

TEST(Csv, RoundTripRandomData) {
  Engine engine = make_engine(21);
  std::normal_distribution<double> normal(0.0, 1e3);
  std::vector<EnvDataset> envs;
  for (int e = 0; e < 4; ++e) {
    EnvDataset env;
    env.env_id = "env,\"" + std::to_string(e) + "\"";
    env.covariate_names = {"x1", "x 2", "x3"};
    env.covariates.resize(5 + e, 3);
    for (Eigen::Index i = 0; i < env.covariates.size(); ++i) env.covariates(i) = normal(engine);
    Eigen::VectorXd y(5 + e);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = normal(engine) * 1e-7;
    env.outcomes = y;
    envs.push_back(env);
  }
  const MultiEnvData data(envs);
  std::stringstream buffer;
  write_multi_env_csv(buffer, data);
  const auto back = parse_multi_env_csv(buffer, "env_id", std::string("y"));
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t e = 0; e < data.size(); ++e) {
    EXPECT_EQ(back[e].env_id, data[e].env_id);
    EXPECT_LE((back[e].covariates - data[e].covariates).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((back[e].y() - data[e].y()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

}  // namespace
}  // namespace eacs
