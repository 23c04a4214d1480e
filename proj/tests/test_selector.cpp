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

#include "eacs/autodiff.hpp"
#include "eacs/env_data.hpp"
#include "eacs/error.hpp"
#include "eacs/risk.hpp"
#include "eacs/selector.hpp"
#include "eacs/serialize.hpp"

namespace eacs {
namespace {

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index p, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(engine);
  return x;
}

std::vector<EnvSummary> as_summaries(const Eigen::MatrixXd& u) {
  std::vector<EnvSummary> out;
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    EnvSummary s;
    s.values = u.row(r).transpose();
    for (Eigen::Index j = 0; j < u.cols(); ++j) s.feature_names.push_back("f" + std::to_string(j));
    out.push_back(s);
  }
  return out;
}

/// Relative error between two gradient vectors, measured in the 2-norm.
double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / denom;
}

void check_selector_gradients(const std::vector<int>& sizes, double l2) {
  Engine engine = make_engine(100 + sizes.size());
  std::uniform_int_distribution<int> label(0, sizes.back() - 1);
  const double h = 1e-5;
  for (int point = 0; point < 20; ++point) {
    Mlp net = Mlp::glorot(sizes, engine);
    for (auto* p : parameter_refs(net)) {
      *p += 0.3 * gaussian(p->rows(), p->cols(), engine);
    }
    const Eigen::MatrixXd u = gaussian(12, sizes.front(), engine);
    std::vector<int> labels(12);
    for (int& l : labels) l = label(engine);

    const SelectorObjective obj = selector_objective(net, u, labels, l2);
    const Eigen::VectorXd analytic = flatten(obj.grads);
    auto refs = parameter_refs(net);
    const Eigen::VectorXd theta = flatten(refs);
    Eigen::VectorXd numeric(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd t = theta;
      t(i) += h;
      unflatten(t, refs);
      const double up = selector_objective(net, u, labels, l2).loss;
      t(i) -= 2 * h;
      unflatten(t, refs);
      const double down = selector_objective(net, u, labels, l2).loss;
      numeric(i) = (up - down) / (2 * h);
    }
    unflatten(theta, refs);
    EXPECT_LT(relative_error(analytic, numeric), 1e-4) << "point " << point;
  }
}

TEST(SelectorGradient, LogisticMatchesFiniteDifferences) {
  check_selector_gradients({3, 4}, 0.7);
}

TEST(SelectorGradient, MlpMatchesFiniteDifferences) {
  check_selector_gradients({3, 6, 5, 4}, 1.0);
}

TEST(SelectorObjective, PenaltySkipsBiases) {
  Engine engine = make_engine(1);
  Mlp net = Mlp::glorot({2, 3}, engine);
  net.layers[0].bias << 5, -5, 1;
  const Eigen::MatrixXd u = gaussian(4, 2, engine);
  const std::vector<int> labels{0, 1, 2, 0};
  const double base = selector_objective(net, u, labels, 0.0).loss;
  const double pen = selector_objective(net, u, labels, 2.0).loss;
  EXPECT_NEAR(pen - base, 0.5 * 2.0 / 4.0 * net.layers[0].weight.squaredNorm(), 1e-12);
}

TEST(Selector, SoftmaxNormalized) {
  Engine engine = make_engine(2);
  const Eigen::MatrixXd u = gaussian(50, 3, engine);
  std::vector<int> labels(50);
  for (int i = 0; i < 50; ++i) labels[static_cast<std::size_t>(i)] = i % 4;
  SelectorTrainConfig cfg;
  cfg.kind = SelectorKind::kMlp;
  cfg.max_epochs = 50;
  const auto model = train_selector(as_summaries(u), labels, build_library(2), cfg);
  const Eigen::MatrixXd p = model.probabilities(100.0 * gaussian(200, 3, engine));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-9);
    EXPECT_GE(p.row(r).minCoeff(), 0.0);
  }
}

TEST(Selector, ConstantLabelsDominateForAnyPenalty) {
  Engine engine = make_engine(3);
  const auto summaries = as_summaries(gaussian(40, 2, engine));
  const std::vector<int> labels(40, 1);
  SelectorTrainConfig cfg;
  cfg.max_epochs = 2000;
  double worst = 1.0;
  for (double l2 : {10.0, 1.0, 0.0}) {
    cfg.l2_penalty = l2;
    const auto model = train_selector(summaries, labels, build_library(2), cfg);
    worst = 1.0;
    for (const auto& s : summaries) {
      EXPECT_EQ(model.predict_class(s), 1u);
      worst = std::min(worst, model.probabilities(s)(1));
    }
  }
  EXPECT_GT(worst, 0.99);
}

TEST(Selector, SeparableDataFitsExactly) {
  Engine engine = make_engine(4);
  Eigen::MatrixXd u = gaussian(60, 2, engine);
  std::vector<int> labels(60);
  for (Eigen::Index r = 0; r < 60; ++r) {
    labels[static_cast<std::size_t>(r)] = r % 2;
    u(r, 0) += r % 2 == 0 ? -3.0 : 3.0;
  }
  const auto summaries = as_summaries(u);
  const SubsetLibrary lib({SubsetMask::from_bits("10"), SubsetMask::all(2)}, {0});
  const auto model = train_selector(summaries, labels, lib, SelectorTrainConfig{});
  for (std::size_t e = 0; e < summaries.size(); ++e) {
    EXPECT_EQ(static_cast<int>(model.predict_class(summaries[e])), labels[e]);
  }
}

TEST(Selector, LabelValidation) {
  Engine engine = make_engine(5);
  const auto summaries = as_summaries(gaussian(3, 2, engine));
  EXPECT_THROW(train_selector(summaries, {0, 1, 4}, build_library(2), {}), InvalidArgument);
  EXPECT_THROW(train_selector(summaries, {0, 1}, build_library(2), {}), InvalidArgument);
}

SelectorModel fixed_logits_model(const Eigen::RowVectorXd& bias, const SubsetLibrary& lib,
                                 PredictionRule rule) {
  SelectorModel m;
  m.network.layers.push_back({Eigen::MatrixXd::Zero(3, bias.size()), bias});
  m.class_masks = lib.masks();
  m.feature_names = {"sd[C2]", "sd[X]", "corr[C2,X]"};
  m.rule = rule;
  return m;
}

TEST(Selector, SingleClassLibrary) {
  const SubsetLibrary lib({SubsetMask::from_bits("10")});
  const auto env = generate_running_example({}, 50, 1.0, 6);
  const auto summary = summarize_moments(env, SummaryConfig{});
  const MultiEnvData data({env});
  const auto predictors = fit_library(data, lib);
  const auto hard = fixed_logits_model(Eigen::RowVectorXd::Zero(1), lib, PredictionRule::kHard);
  const auto soft = fixed_logits_model(Eigen::RowVectorXd::Zero(1), lib, PredictionRule::kSoft);
  EXPECT_EQ(select_mask(hard, summary), lib[0]);
  EXPECT_EQ(predict_environment(hard, predictors, env), predict_environment(soft, predictors, env));
}

TEST(Selector, OneHotSoftEqualsHard) {
  const auto lib = build_library(2);
  const auto env = generate_running_example({}, 50, 1.0, 7);
  const auto predictors = fit_library(MultiEnvData({env}), lib);
  Eigen::RowVectorXd bias(4);
  bias << 0, 0, 1000, 0;
  const auto hard = fixed_logits_model(bias, lib, PredictionRule::kHard);
  const auto soft = fixed_logits_model(bias, lib, PredictionRule::kSoft);
  EXPECT_EQ(hard.probabilities(summarize_moments(env, SummaryConfig{}))(2), 1.0);
  EXPECT_EQ(predict_environment(hard, predictors, env), predict_environment(soft, predictors, env));
}

TEST(Selector, SoftRuleMixesPredictors) {
  const auto lib = build_library(2, {0});
  const auto env = generate_running_example({}, 50, 1.0, 8);
  const auto predictors = fit_library(MultiEnvData({env}), lib);
  Eigen::RowVectorXd bias(2);
  bias << 0, std::log(3.0);
  const auto soft = fixed_logits_model(bias, lib, PredictionRule::kSoft);
  const Eigen::VectorXd expect =
      0.25 * predictors[0].predict(env.covariates) + 0.75 * predictors[1].predict(env.covariates);
  EXPECT_LE((predict_environment(soft, predictors, env) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

GridSpec grid(int per_type, int n) {
  GridSpec g;
  g.per_type_count = per_type;
  g.n = n;
  return g;
}

struct Trained {
  MultiEnvData train;
  SubsetLibrary library;
  std::vector<LinearPredictor> predictors;
  RiskTable table;
  SelectorModel model;
};

Trained train_default(const SubsetLibrary& library, std::uint64_t seed) {
  Trained t;
  t.train = generate_environment_grid(GridSpec{}, 1.0, seed);
  t.library = library;
  t.predictors = fit_library(t.train, library);
  t.table = build_risk_table(t.train, library, t.predictors);
  t.model = train_selector(summarize_all(t.train, SummaryConfig{}), t.table.labels, library,
                           SelectorTrainConfig{});
  return t;
}

TEST(Selector, BaseEnvironmentPicksFullSubset) {
  const auto t = train_default(build_library(2, {0}), 9);
  Engine engine = make_engine(10);
  for (int k = 0; k < 5; ++k) {
    const auto env = generate_running_example({}, 100, 1.0, engine);
    EXPECT_EQ(select_mask(t.model, summarize_moments(env, SummaryConfig{})), SubsetMask::all(2));
  }
}

TEST(Selector, ConstrainedSelectionsContainS) {
  const auto t = train_default(build_library(2, {0}), 11);
  const auto test = generate_environment_grid(GridSpec{}, 1.0, 11, 0, StreamRole::kTest);
  for (const auto& env : test.environments()) {
    EXPECT_TRUE(select_mask(t.model, summarize_moments(env, SummaryConfig{})).contains_all({0}));
  }
}

TEST(Selector, MlpSelectorLearnsRule) {
  GridSpec g;
  g.per_type_count = 40;
  const auto train = generate_environment_grid(g, 1.0, 12);
  const auto lib = build_library(2);
  const auto table = build_risk_table(train, lib, fit_library(train, lib));
  SelectorTrainConfig cfg;
  cfg.kind = SelectorKind::kMlp;
  cfg.max_epochs = 300;
  const auto summaries = summarize_all(train, SummaryConfig{});
  const auto model = train_selector(summaries, table.labels, lib, cfg);
  int correct = 0;
  for (std::size_t e = 0; e < summaries.size(); ++e) {
    correct += static_cast<int>(model.predict_class(summaries[e])) == table.labels[e];
  }
  EXPECT_GT(correct, 100);
}

TEST(FallbackGuard, EqualRisksFallBack) {
  const auto lib = build_library(2);
  const auto train = generate_environment_grid(grid(20, 50), 1.0, 13);
  const auto predictors = fit_library(train, lib);
  const auto table = build_risk_table(train, lib, predictors);
  const std::size_t fixed = best_fixed_index(table);
  Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(4);
  bias(static_cast<Eigen::Index>(fixed)) = 50.0;
  const auto model = fixed_logits_model(bias, lib, PredictionRule::kHard);
  const auto heldout = generate_environment_grid(grid(20, 50), 1.0, 13, 0, StreamRole::kTest);
  const auto d = fallback_guard(model, predictors, heldout, table);
  EXPECT_EQ(d.adaptive_risk, d.fixed_risk);
  EXPECT_FALSE(d.use_adaptive);
  EXPECT_EQ(d.fixed_index, fixed);
}

TEST(FallbackGuard, InformativeSummariesKeepAdaptive) {
  const auto t = train_default(build_library(2), 14);
  const auto heldout = generate_environment_grid(GridSpec{}, 1.0, 14, 0, StreamRole::kTest);
  const auto d = fallback_guard(t.model, t.predictors, heldout, t.table);
  EXPECT_TRUE(d.use_adaptive);
  EXPECT_LT(d.adaptive_risk, d.fixed_risk);
}

TEST(FallbackGuard, NoiseSummariesFallBack) {
  int fixed = 0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    GridSpec g;
    g.per_type_count = 30;
    const auto train = generate_environment_grid(g, 1.0, 200 + trial);
    const auto heldout = generate_environment_grid(g, 1.0, 200 + trial, 0, StreamRole::kTest);
    const auto lib = build_library(2);
    const auto predictors = fit_library(train, lib);
    const auto table = build_risk_table(train, lib, predictors);
    Engine engine = make_engine(StreamKey{300, static_cast<std::uint64_t>(trial),
                                          StreamRole::kAuxiliary, 0});
    const auto noise_train = as_summaries(gaussian(static_cast<Eigen::Index>(train.size()), 3, engine));
    const auto noise_test = as_summaries(gaussian(static_cast<Eigen::Index>(heldout.size()), 3, engine));
    const auto model = train_selector(noise_train, table.labels, lib, SelectorTrainConfig{});
    fixed += !fallback_guard(model, predictors, heldout, table, noise_test).use_adaptive;
  }
  EXPECT_GE(fixed, 9);
}

TEST(SelectorSerialization, RoundTrip) {
  GridSpec g;
  g.per_type_count = 10;
  const auto train = generate_environment_grid(g, 1.0, 15);
  const auto lib = build_library(2);
  const auto table = build_risk_table(train, lib, fit_library(train, lib));
  SummaryConfig sc;
  sc.standardize_across_envs = true;
  const auto summaries = summarize_all(train, sc);
  SelectorTrainConfig cfg;
  cfg.kind = SelectorKind::kMlp;
  cfg.max_epochs = 20;
  cfg.rule = PredictionRule::kSoft;
  const auto model = train_selector(summaries, table.labels, lib, cfg, sc);
  const auto back = selector_from_json(to_json(model));
  EXPECT_EQ(model_kind(to_json(model)), "selector");
  EXPECT_EQ(back.rule, PredictionRule::kSoft);
  EXPECT_EQ(back.class_masks, model.class_masks);
  for (const auto& s : summaries) EXPECT_EQ(back.probabilities(s), model.probabilities(s));
  EXPECT_THROW(selector_from_json("{\"format\":\"eacs\",\"version\":99}"), DataError);
}

}  // namespace
}  // namespace eacs
