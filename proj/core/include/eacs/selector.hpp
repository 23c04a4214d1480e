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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eacs/linear_model.hpp"
#include "eacs/nn.hpp"
#include "eacs/risk.hpp"
#include "eacs/subsets.hpp"
#include "eacs/summaries.hpp"

namespace eacs {

enum class SelectorKind { kMultinomialLogistic, kMlp };
enum class PredictionRule { kHard, kSoft };

std::string to_string(SelectorKind kind);
std::string to_string(PredictionRule rule);
SelectorKind parse_selector_kind(const std::string& text);
PredictionRule parse_prediction_rule(const std::string& text);

struct SelectorTrainConfig {
  SelectorKind kind = SelectorKind::kMultinomialLogistic;
  /// lambda in sum_e CE_e + (lambda / 2) ||W||^2 (biases unpenalized). The
  /// optimized objective is this divided by the number of environments.
  double l2_penalty = 1.0;
  double learning_rate = 0.05;
  int max_epochs = 500;
  std::vector<int> hidden_sizes{64, 32};
  std::uint64_t seed = 0;
  PredictionRule rule = PredictionRule::kHard;

  void validate() const;
};

/// Multiclass map from environment summaries to library masks.
struct SelectorModel {
  SelectorKind kind = SelectorKind::kMultinomialLogistic;
  /// Logistic selectors are a single affine layer.
  Mlp network;
  std::vector<SubsetMask> class_masks;
  std::vector<int> constraint;
  std::vector<std::string> feature_names;
  SummaryConfig summary_config;
  std::optional<SummaryStandardizer> standardizer;
  PredictionRule rule = PredictionRule::kHard;
  double final_loss = 0.0;

  std::size_t num_classes() const { return class_masks.size(); }
  /// Class probabilities for a raw (unstandardized) summary.
  Eigen::VectorXd probabilities(const EnvSummary& summary) const;
  /// Row-wise probabilities for raw summaries stacked as rows.
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& raw_summaries) const;
  /// Highest-probability class, earliest on ties.
  std::size_t predict_class(const EnvSummary& summary) const;
};

/// Mean softmax cross-entropy plus (l2_penalty / 2n) ||W||^2 over n input
/// rows, with gradients ordered like parameter_refs(network).
struct SelectorObjective {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> grads;
};
SelectorObjective selector_objective(const Mlp& network, const Eigen::MatrixXd& inputs,
                                     const std::vector<int>& labels, double l2_penalty);

/// Full-batch Adam on the selector objective for cfg.max_epochs epochs.
/// Logistic weights start at zero; MLP weights are Glorot-uniform from
/// cfg.seed. Summaries are standardized first when
/// summary_config.standardize_across_envs is set.
SelectorModel train_selector(const std::vector<EnvSummary>& summaries,
                             const std::vector<int>& labels, const SubsetLibrary& library,
                             const SelectorTrainConfig& cfg,
                             const SummaryConfig& summary_config = {});

SubsetMask select_mask(const SelectorModel& model, const EnvSummary& summary);

/// Predictions for every row of `env`; all rows share one selection. Hard
/// rule uses the argmax predictor, soft rule mixes predictors by probability.
Eigen::VectorXd predict_environment(const SelectorModel& model,
                                    const std::vector<LinearPredictor>& predictors,
                                    const EnvDataset& env, const EnvSummary& summary);
Eigen::VectorXd predict_environment(const SelectorModel& model,
                                    const std::vector<LinearPredictor>& predictors,
                                    const EnvDataset& env);

struct FallbackDecision {
  bool use_adaptive = true;
  std::size_t fixed_index = 0;
  SubsetMask fixed_mask;
  double adaptive_risk = 0.0;
  double fixed_risk = 0.0;
};

/// Compares the adaptive rule with the best fixed subset (chosen on the
/// training risk table) by mean held-out risk. The fixed subset is returned
/// unless the adaptive rule strictly improves on it.
FallbackDecision fallback_guard(const SelectorModel& model,
                                const std::vector<LinearPredictor>& predictors,
                                const MultiEnvData& heldout, const RiskTable& train_table,
                                const std::vector<EnvSummary>& heldout_summaries = {});

}  // namespace eacs
