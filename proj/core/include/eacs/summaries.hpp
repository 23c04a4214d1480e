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
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "eacs/env_data.hpp"
#include "eacs/nn.hpp"

namespace eacs {

/// Fixed-length representation of one environment's covariate sample.
struct EnvSummary {
  Eigen::VectorXd values;
  std::vector<std::string> feature_names;
  std::string encoder_id;
  /// Raised when a zero-variance column forced correlation entries to 0.
  bool degenerate = false;

  Eigen::Index size() const { return values.size(); }
};

/// Which statistic blocks summarize_moments emits. Blocks are concatenated
/// in the order means, SDs, pairwise correlations, partial correlations;
/// pairwise blocks list the upper triangle row-major.
struct SummaryConfig {
  bool include_means = false;
  bool include_sds = true;
  bool include_pairwise_corr = true;
  bool include_partial_corr = false;
  double shrinkage_alpha_max = 0.3;
  bool standardize_across_envs = false;
  /// Optional whitelist of feature names (e.g. {"corr[C2,X]"}); empty keeps all.
  std::vector<std::string> keep_features;

  void validate() const;
  std::string encoder_id() const;
};

/// Feature names emitted for a covariate schema, before keep_features.
std::vector<std::string> summary_feature_names(const std::vector<std::string>& covariates,
                                               const SummaryConfig& cfg);

EnvSummary summarize_moments(const EnvDataset& env, const SummaryConfig& cfg);
std::vector<EnvSummary> summarize_all(const MultiEnvData& data, const SummaryConfig& cfg);

/// alpha = min(alpha_max, p / max(n, p + 1)).
double shrinkage_weight(Eigen::Index p, Eigen::Index n, double alpha_max);

/// Partial correlations (upper triangle, row-major) from the covariance
/// shrunk toward its diagonal, inverted with a pseudoinverse fallback.
/// Entries whose normalizer is nonpositive or nonfinite are 0.
Eigen::VectorXd partial_correlations(const EnvDataset& env, double alpha_max);
Eigen::VectorXd partial_correlations(const Eigen::MatrixXd& covariates, double alpha_max);

/// Per-coordinate z-scoring fitted on training summaries only.
class SummaryStandardizer {
 public:
  SummaryStandardizer() = default;
  SummaryStandardizer(std::vector<std::string> names, Eigen::VectorXd mean,
                      Eigen::VectorXd scale);

  static SummaryStandardizer fit(const std::vector<EnvSummary>& train);

  /// Zero-SD coordinates are centered only.
  EnvSummary apply(const EnvSummary& summary) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& values) const;

  const std::vector<std::string>& feature_names() const { return names_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  std::vector<std::string> names_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;  // 1 where the training SD is zero
};

std::pair<SummaryStandardizer, std::vector<EnvSummary>> standardize_summaries(
    const std::vector<EnvSummary>& train, const std::vector<EnvSummary>& apply_to);

/// Row-stacks summary values into an environments x features matrix.
Eigen::MatrixXd stack_summaries(const std::vector<EnvSummary>& summaries);

enum class Pooling { kMean, kSum };

/// Permutation-invariant set encoder rho(pool(phi(x_i))). phi and rho are
/// two-layer ReLU networks; phi's output is rectified, rho's is linear.
struct SetEncoderModel {
  Mlp phi;
  Mlp rho;
  Pooling pooling = Pooling::kMean;

  static SetEncoderModel init(int input_dim, int hidden, int embedding_dim, Pooling pooling,
                              Engine& engine);
  Eigen::Index input_dim() const { return phi.input_dim(); }
  Eigen::Index embedding_dim() const { return rho.output_dim(); }
};

EnvSummary set_encode(const EnvDataset& env, const SetEncoderModel& model);
Eigen::VectorXd set_encode(const Eigen::MatrixXd& rows, const SetEncoderModel& model);

/// One CSV row per environment with named columns.
void write_summaries_csv(const std::string& path, const std::vector<std::string>& env_ids,
                         const std::vector<EnvSummary>& summaries);

}  // namespace eacs
