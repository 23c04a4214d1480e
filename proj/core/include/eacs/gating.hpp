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

#include "eacs/env_data.hpp"
#include "eacs/linear_model.hpp"
#include "eacs/nn.hpp"
#include "eacs/summaries.hpp"

namespace eacs {

enum class GateContext { kSummary, kSetEncoder };
/// Hard pins constrained gates at 1; soft leaves them free under the
/// -gamma * log(gate) prior.
enum class ConstraintMode { kHard, kSoft };

std::string to_string(GateContext context);
GateContext parse_gate_context(const std::string& text);
std::string to_string(ConstraintMode mode);
ConstraintMode parse_constraint_mode(const std::string& text);

struct GateTrainConfig {
  std::vector<int> gate_hidden_sizes{128, 128};
  double learning_rate = 1e-2;
  int max_epochs = 2000;
  std::uint64_t seed = 0;
  GateContext context = GateContext::kSummary;
  double temperature = 0.2;
  std::vector<int> constraint;
  ConstraintMode constraint_mode = ConstraintMode::kHard;
  double soft_prior_gamma = 0.0;
  /// Weight on the mean L1 norm of free gates; 0 disables it.
  double l1_gates = 0.0;
  int encoder_hidden = 128;
  int encoder_embedding = 64;
  Pooling encoder_pooling = Pooling::kMean;
  /// Fixed gate vector; only the head is fitted (exactly, by least squares).
  std::optional<Eigen::VectorXd> frozen_gates;

  void validate(std::size_t p) const;
};

/// Shared linear head on standardized covariates plus an
/// environment-conditioned gate network.
struct GateModel {
  GateContext context = GateContext::kSummary;
  Mlp gate;
  std::optional<SetEncoderModel> encoder;
  Eigen::MatrixXd head_weight;  // p x 1
  Eigen::MatrixXd head_bias;    // 1 x 1
  Eigen::VectorXd covariate_mean;
  Eigen::VectorXd covariate_scale;
  std::vector<std::string> covariate_names;
  std::vector<std::string> feature_names;
  SummaryConfig summary_config;
  std::optional<SummaryStandardizer> standardizer;
  double temperature = 0.2;
  std::vector<int> constraint;
  bool pin_constraint = true;
  double soft_prior_gamma = 0.0;
  double l1_gates = 0.0;
  std::optional<Eigen::VectorXd> frozen_gates;
  std::vector<double> loss_trace;

  std::size_t num_covariates() const { return covariate_names.size(); }
  /// Original-scale linear predictor equivalent to the head under `gates`.
  LinearPredictor effective_predictor(const Eigen::VectorXd& gates) const;
};

/// sigmoid(logits / tau), with pinned coordinates set to exactly 1.
Eigen::VectorXd apply_gate(const Eigen::VectorXd& logits, double temperature,
                           const std::vector<int>& pinned);

/// Gate from a raw summary (summary context only).
Eigen::VectorXd gate_forward(const GateModel& model, const EnvSummary& summary);
/// Gate for an environment under either context.
Eigen::VectorXd gate_values(const GateModel& model, const EnvDataset& env,
                            const EnvSummary* summary = nullptr);
Eigen::VectorXd gate_predict(const GateModel& model, const EnvDataset& env,
                             const EnvSummary* summary = nullptr);

/// Training tensors shared by the objective and the optimizer.
struct GateBatch {
  Eigen::MatrixXd x;  // standardized, N x p
  Eigen::VectorXd y;
  Eigen::VectorXd weights;  // 1 / (E n_e) per row
  std::vector<Eigen::Index> row_env;
  std::vector<Eigen::Index> offsets;  // E + 1
  Eigen::MatrixXd contexts;           // E x d, summary context only
};

GateBatch make_gate_batch(const GateModel& model, const MultiEnvData& data,
                          const std::vector<EnvSummary>& summaries);

/// Trainable parameters: head weight, head bias, then gate network layers,
/// then encoder phi and rho layers. Frozen gates contribute no gate entries.
std::vector<Eigen::MatrixXd*> gate_parameter_refs(GateModel& model);

struct GateObjective {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> grads;
  /// Per-environment mean squared error.
  Eigen::VectorXd env_losses;
};

/// Environment-averaged squared error plus the soft prior and L1 terms.
GateObjective gate_objective(const GateModel& model, const GateBatch& batch);

/// Adam with step halving and rollback whenever the loss would increase, so
/// loss_trace is nonincreasing. `summaries` are raw and required for the
/// summary context (the gate always z-scores them on the training set);
/// they are ignored for set encoders.
GateModel train_soft_gating(const MultiEnvData& data, const std::vector<EnvSummary>& summaries,
                            const GateTrainConfig& cfg,
                            const SummaryConfig& summary_config = {});

/// env_id then one gate column per covariate.
void write_gates_csv(const std::string& path, const GateModel& model, const MultiEnvData& data,
                     const std::vector<EnvSummary>& summaries);

}  // namespace eacs
