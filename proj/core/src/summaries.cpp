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

#include "eacs/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>

#include "eacs/csv.hpp"
#include "eacs/error.hpp"

namespace eacs {

void SummaryConfig::validate() const {
  if (!include_means && !include_sds && !include_pairwise_corr && !include_partial_corr) {
    throw InvalidArgument("SummaryConfig: at least one statistic family must be enabled");
  }
  if (!(shrinkage_alpha_max >= 0.0 && shrinkage_alpha_max <= 1.0)) {
    throw InvalidArgument("SummaryConfig: shrinkage_alpha_max must lie in [0, 1]");
  }
}

std::string SummaryConfig::encoder_id() const {
  std::string id = "moments:";
  std::string sep;
  auto add = [&](bool on, const char* tag) {
    if (!on) return;
    id += sep + tag;
    sep = "+";
  };
  add(include_means, "mean");
  add(include_sds, "sd");
  add(include_pairwise_corr, "corr");
  add(include_partial_corr, "pcorr");
  if (!keep_features.empty()) {
    id += "|";
    for (std::size_t k = 0; k < keep_features.size(); ++k) {
      id += (k ? "," : "") + keep_features[k];
    }
  }
  return id;
}

std::vector<std::string> summary_feature_names(const std::vector<std::string>& covariates,
                                               const SummaryConfig& cfg) {
  std::vector<std::string> names;
  const auto p = covariates.size();
  if (cfg.include_means) {
    for (const auto& c : covariates) names.push_back("mean[" + c + "]");
  }
  if (cfg.include_sds) {
    for (const auto& c : covariates) names.push_back("sd[" + c + "]");
  }
  auto pairs = [&](const char* tag) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        names.push_back(std::string(tag) + "[" + covariates[i] + "," + covariates[j] + "]");
      }
    }
  };
  if (cfg.include_pairwise_corr) pairs("corr");
  if (cfg.include_partial_corr) pairs("pcorr");
  return names;
}

double shrinkage_weight(Eigen::Index p, Eigen::Index n, double alpha_max) {
  const double denom = static_cast<double>(std::max(n, p + 1));
  return std::min(alpha_max, static_cast<double>(p) / denom);
}

Eigen::VectorXd partial_correlations(const Eigen::MatrixXd& x, double alpha_max) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < 2) throw InvalidArgument("partial_correlations: need at least 2 rows");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p * (p - 1) / 2);
  if (p < 2) return out;

  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double alpha = shrinkage_weight(p, n, alpha_max);
  Eigen::MatrixXd shrunk = (1.0 - alpha) * cov;
  shrunk.diagonal() = cov.diagonal();

  Eigen::MatrixXd precision;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(shrunk);
  if (lu.isInvertible() && shrunk.allFinite()) {
    precision = lu.inverse();
  }
  if (precision.size() == 0 || !precision.allFinite()) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(shrunk);
    precision = cod.pseudoInverse();
  }

  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j, ++k) {
      const double denom_sq = precision(i, i) * precision(j, j);
      if (!(denom_sq > 0.0) || !std::isfinite(denom_sq)) continue;
      const double rho = -precision(i, j) / std::sqrt(denom_sq);
      if (!std::isfinite(rho)) continue;
      out(k) = std::clamp(rho, -1.0, 1.0);
    }
  }
  return out;
}

Eigen::VectorXd partial_correlations(const EnvDataset& env, double alpha_max) {
  return partial_correlations(env.covariates, alpha_max);
}

EnvSummary summarize_moments(const EnvDataset& env, const SummaryConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = env.rows();
  const Eigen::Index p = env.cols();
  const bool needs_variance =
      cfg.include_sds || cfg.include_pairwise_corr || cfg.include_partial_corr;
  if (needs_variance && n < 2) {
    throw InvalidArgument("summarize_moments: environment '" + env.env_id +
                          "' needs at least 2 rows for variance statistics");
  }

  EnvSummary s;
  s.encoder_id = cfg.encoder_id();
  std::vector<double> values;
  const Eigen::RowVectorXd mean = env.covariates.colwise().mean();
  if (cfg.include_means) {
    for (Eigen::Index j = 0; j < p; ++j) values.push_back(mean(j));
  }
  Eigen::MatrixXd cov;
  if (needs_variance) {
    const Eigen::MatrixXd centered = env.covariates.rowwise() - mean;
    cov = centered.transpose() * centered / static_cast<double>(n - 1);
  }
  if (cfg.include_sds) {
    for (Eigen::Index j = 0; j < p; ++j) values.push_back(std::sqrt(std::max(cov(j, j), 0.0)));
  }
  if (cfg.include_pairwise_corr) {
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i + 1; j < p; ++j) {
        const double denom = cov(i, i) * cov(j, j);
        if (denom > 0.0 && std::isfinite(denom)) {
          values.push_back(std::clamp(cov(i, j) / std::sqrt(denom), -1.0, 1.0));
        } else {
          values.push_back(0.0);
          s.degenerate = true;
        }
      }
    }
  }
  if (cfg.include_partial_corr) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(cov(j, j) > 0.0)) s.degenerate = true;
    }
    const Eigen::VectorXd pc = partial_correlations(env.covariates, cfg.shrinkage_alpha_max);
    values.insert(values.end(), pc.data(), pc.data() + pc.size());
  }

  auto names = summary_feature_names(env.covariate_names, cfg);
  if (cfg.keep_features.empty()) {
    s.feature_names = std::move(names);
    s.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  } else {
    s.values.resize(static_cast<Eigen::Index>(cfg.keep_features.size()));
    for (std::size_t k = 0; k < cfg.keep_features.size(); ++k) {
      auto it = std::find(names.begin(), names.end(), cfg.keep_features[k]);
      if (it == names.end()) {
        throw InvalidArgument("summarize_moments: unknown summary feature '" +
                              cfg.keep_features[k] + "'");
      }
      s.values(static_cast<Eigen::Index>(k)) = values[static_cast<std::size_t>(it - names.begin())];
    }
    s.feature_names = cfg.keep_features;
  }
  return s;
}

std::vector<EnvSummary> summarize_all(const MultiEnvData& data, const SummaryConfig& cfg) {
  std::vector<EnvSummary> out;
  out.reserve(data.size());
  for (const auto& env : data.environments()) out.push_back(summarize_moments(env, cfg));
  return out;
}

SummaryStandardizer::SummaryStandardizer(std::vector<std::string> names, Eigen::VectorXd mean,
                                         Eigen::VectorXd scale)
    : names_(std::move(names)), mean_(std::move(mean)), scale_(std::move(scale)) {
  if (static_cast<Eigen::Index>(names_.size()) != mean_.size() || mean_.size() != scale_.size()) {
    throw InvalidArgument("SummaryStandardizer: inconsistent sizes");
  }
}

SummaryStandardizer SummaryStandardizer::fit(const std::vector<EnvSummary>& train) {
  if (train.empty()) throw InvalidArgument("standardize_summaries: empty training set");
  const auto& names = train.front().feature_names;
  const Eigen::Index d = train.front().size();
  for (const auto& s : train) {
    if (s.feature_names != names) {
      throw InvalidArgument("standardize_summaries: feature-name mismatch");
    }
  }
  const Eigen::MatrixXd u = stack_summaries(train);
  Eigen::VectorXd mean = u.colwise().mean().transpose();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  if (u.rows() > 1) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double var =
          (u.col(j).array() - mean(j)).square().sum() / static_cast<double>(u.rows() - 1);
      const double sd = std::sqrt(var);
      // Relative guard so constant columns are treated as zero-variance
      // despite rounding in the mean.
      if (sd > 1e-12 * std::max(1.0, std::abs(mean(j)))) scale(j) = sd;
    }
  }
  return SummaryStandardizer(names, std::move(mean), std::move(scale));
}

Eigen::VectorXd SummaryStandardizer::apply(const Eigen::VectorXd& values) const {
  if (values.size() != mean_.size()) {
    throw InvalidArgument("SummaryStandardizer: width mismatch");
  }
  return ((values - mean_).array() / scale_.array()).matrix();
}

EnvSummary SummaryStandardizer::apply(const EnvSummary& summary) const {
  if (summary.feature_names != names_) {
    throw InvalidArgument("SummaryStandardizer: feature-name mismatch");
  }
  EnvSummary out = summary;
  out.values = apply(summary.values);
  return out;
}

std::pair<SummaryStandardizer, std::vector<EnvSummary>> standardize_summaries(
    const std::vector<EnvSummary>& train, const std::vector<EnvSummary>& apply_to) {
  auto standardizer = SummaryStandardizer::fit(train);
  std::vector<EnvSummary> out;
  out.reserve(apply_to.size());
  for (const auto& s : apply_to) out.push_back(standardizer.apply(s));
  return {std::move(standardizer), std::move(out)};
}

Eigen::MatrixXd stack_summaries(const std::vector<EnvSummary>& summaries) {
  if (summaries.empty()) return {};
  const Eigen::Index d = summaries.front().size();
  Eigen::MatrixXd u(static_cast<Eigen::Index>(summaries.size()), d);
  for (std::size_t e = 0; e < summaries.size(); ++e) {
    if (summaries[e].size() != d) throw InvalidArgument("stack_summaries: ragged summaries");
    if (!summaries[e].values.allFinite()) {
      throw InvalidArgument("stack_summaries: nonfinite summary values");
    }
    u.row(static_cast<Eigen::Index>(e)) = summaries[e].values.transpose();
  }
  return u;
}

SetEncoderModel SetEncoderModel::init(int input_dim, int hidden, int embedding_dim,
                                      Pooling pooling, Engine& engine) {
  SetEncoderModel m;
  m.phi = Mlp::glorot({input_dim, hidden, hidden}, engine, false, true);
  m.rho = Mlp::glorot({hidden, hidden, embedding_dim}, engine);
  m.pooling = pooling;
  return m;
}

Eigen::VectorXd set_encode(const Eigen::MatrixXd& rows, const SetEncoderModel& model) {
  if (rows.cols() != model.input_dim()) {
    throw InvalidArgument("set_encode: covariate width does not match the encoder");
  }
  if (rows.rows() < 1) throw InvalidArgument("set_encode: empty environment");
  const Eigen::MatrixXd h = model.phi.forward(rows);
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(1, h.cols());
  for (Eigen::Index r = 0; r < h.rows(); ++r) pooled.row(0) += h.row(r);
  if (model.pooling == Pooling::kMean) pooled /= static_cast<double>(h.rows());
  return model.rho.forward(pooled).row(0).transpose();
}

EnvSummary set_encode(const EnvDataset& env, const SetEncoderModel& model) {
  EnvSummary s;
  s.values = set_encode(env.covariates, model);
  s.encoder_id = model.pooling == Pooling::kMean ? "deepsets:mean" : "deepsets:sum";
  for (Eigen::Index k = 0; k < s.values.size(); ++k) {
    s.feature_names.push_back("emb[" + std::to_string(k) + "]");
  }
  return s;
}

void write_summaries_csv(const std::string& path, const std::vector<std::string>& env_ids,
                         const std::vector<EnvSummary>& summaries) {
  if (env_ids.size() != summaries.size()) {
    throw InvalidArgument("write_summaries_csv: id/summary count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  CsvWriter w(out);
  w.field("env_id");
  if (!summaries.empty()) {
    for (const auto& name : summaries.front().feature_names) w.field(name);
  }
  w.end_row();
  for (std::size_t e = 0; e < summaries.size(); ++e) {
    w.field(env_ids[e]);
    for (Eigen::Index k = 0; k < summaries[e].size(); ++k) w.field(summaries[e].values(k));
    w.end_row();
  }
}

}  // namespace eacs
