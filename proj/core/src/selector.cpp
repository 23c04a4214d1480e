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

#include "eacs/selector.hpp"

#include <cmath>

#include "eacs/autodiff.hpp"
#include "eacs/error.hpp"

namespace eacs {

std::string to_string(SelectorKind kind) {
  return kind == SelectorKind::kMlp ? "mlp" : "multinomial_logistic";
}

std::string to_string(PredictionRule rule) {
  return rule == PredictionRule::kSoft ? "soft" : "hard";
}

SelectorKind parse_selector_kind(const std::string& text) {
  if (text == "mlp") return SelectorKind::kMlp;
  if (text == "multinomial_logistic" || text == "logistic") {
    return SelectorKind::kMultinomialLogistic;
  }
  throw InvalidArgument("unknown selector kind '" + text + "'");
}

PredictionRule parse_prediction_rule(const std::string& text) {
  if (text == "hard") return PredictionRule::kHard;
  if (text == "soft") return PredictionRule::kSoft;
  throw InvalidArgument("unknown prediction rule '" + text + "'");
}

void SelectorTrainConfig::validate() const {
  if (!(l2_penalty >= 0.0)) throw InvalidArgument("selector: l2_penalty must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("selector: learning_rate must be > 0");
  if (max_epochs < 1) throw InvalidArgument("selector: max_epochs must be >= 1");
  if (kind == SelectorKind::kMlp) {
    for (int h : hidden_sizes) {
      if (h < 1) throw InvalidArgument("selector: hidden sizes must be >= 1");
    }
  }
}

Eigen::MatrixXd SelectorModel::probabilities(const Eigen::MatrixXd& raw) const {
  Eigen::MatrixXd u = raw;
  if (standardizer) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      u.row(r) = standardizer->apply(Eigen::VectorXd(raw.row(r).transpose())).transpose();
    }
  }
  return ad::softmax_rows(network.forward(u));
}

Eigen::VectorXd SelectorModel::probabilities(const EnvSummary& summary) const {
  if (summary.feature_names != feature_names) {
    throw InvalidArgument("selector: summary features do not match the training features");
  }
  return probabilities(Eigen::MatrixXd(summary.values.transpose())).row(0).transpose();
}

std::size_t SelectorModel::predict_class(const EnvSummary& summary) const {
  const Eigen::VectorXd p = probabilities(summary);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < p.size(); ++k) {
    if (p(k) > p(best)) best = k;
  }
  return static_cast<std::size_t>(best);
}

SelectorObjective selector_objective(const Mlp& network, const Eigen::MatrixXd& inputs,
                                     const std::vector<int>& labels, double l2_penalty) {
  ad::Tape tape;
  const MlpVars vars = bind(tape, network);
  const ad::Var logits = forward(tape, network, vars, tape.constant(inputs));
  ad::Var loss = tape.softmax_cross_entropy(logits, labels);
  if (l2_penalty > 0.0) {
    const double c = 0.5 * l2_penalty / static_cast<double>(inputs.rows());
    for (std::size_t k = 0; k < vars.params.size(); k += 2) {
      loss = tape.add(loss, tape.scale(tape.sum_squares(vars.params[k]), c));
    }
  }
  tape.backward(loss);
  SelectorObjective out;
  out.loss = tape.scalar(loss);
  for (const auto& v : vars.params) out.grads.push_back(tape.grad(v));
  return out;
}

SelectorModel train_selector(const std::vector<EnvSummary>& summaries,
                             const std::vector<int>& labels, const SubsetLibrary& library,
                             const SelectorTrainConfig& cfg,
                             const SummaryConfig& summary_config) {
  cfg.validate();
  if (summaries.empty()) throw InvalidArgument("train_selector: empty training set");
  if (summaries.size() != labels.size()) {
    throw InvalidArgument("train_selector: summaries and labels are not aligned");
  }
  const auto num_classes = static_cast<int>(library.size());
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw InvalidArgument("train_selector: label out of range");
  }

  SelectorModel model;
  model.kind = cfg.kind;
  model.class_masks = library.masks();
  model.constraint = library.constraint();
  model.feature_names = summaries.front().feature_names;
  model.summary_config = summary_config;
  model.rule = cfg.rule;

  Eigen::MatrixXd u = stack_summaries(summaries);
  for (const auto& s : summaries) {
    if (s.feature_names != model.feature_names) {
      throw InvalidArgument("train_selector: summaries have inconsistent features");
    }
  }
  if (summary_config.standardize_across_envs) {
    model.standardizer = SummaryStandardizer::fit(summaries);
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      u.row(r) = model.standardizer->apply(Eigen::VectorXd(u.row(r).transpose())).transpose();
    }
  }

  const int d = static_cast<int>(u.cols());
  Engine engine = make_engine(StreamKey{cfg.seed, 0, StreamRole::kModel, 0});
  if (cfg.kind == SelectorKind::kMultinomialLogistic) {
    model.network = Mlp::glorot({d, num_classes}, engine, /*zero_last=*/true);
  } else {
    std::vector<int> sizes{d};
    sizes.insert(sizes.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
    sizes.push_back(num_classes);
    model.network = Mlp::glorot(sizes, engine);
  }

  auto params = parameter_refs(model.network);
  Adam adam(params, AdamOptions{cfg.learning_rate});
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    SelectorObjective obj = selector_objective(model.network, u, labels, cfg.l2_penalty);
    if (!std::isfinite(obj.loss)) {
      throw NumericalError("train_selector: nonfinite loss at epoch " + std::to_string(epoch));
    }
    adam.step(obj.grads);
  }
  model.final_loss = selector_objective(model.network, u, labels, cfg.l2_penalty).loss;
  return model;
}

SubsetMask select_mask(const SelectorModel& model, const EnvSummary& summary) {
  return model.class_masks[model.predict_class(summary)];
}

Eigen::VectorXd predict_environment(const SelectorModel& model,
                                    const std::vector<LinearPredictor>& predictors,
                                    const EnvDataset& env, const EnvSummary& summary) {
  if (predictors.size() != model.num_classes()) {
    throw InvalidArgument("predict_environment: predictors not aligned with selector classes");
  }
  if (model.rule == PredictionRule::kHard) {
    return predictors[model.predict_class(summary)].predict(env.covariates);
  }
  const Eigen::VectorXd p = model.probabilities(summary);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(env.rows());
  for (std::size_t k = 0; k < predictors.size(); ++k) {
    const double w = p(static_cast<Eigen::Index>(k));
    if (w != 0.0) out += w * predictors[k].predict(env.covariates);
  }
  return out;
}

Eigen::VectorXd predict_environment(const SelectorModel& model,
                                    const std::vector<LinearPredictor>& predictors,
                                    const EnvDataset& env) {
  return predict_environment(model, predictors, env, summarize_moments(env, model.summary_config));
}

FallbackDecision fallback_guard(const SelectorModel& model,
                                const std::vector<LinearPredictor>& predictors,
                                const MultiEnvData& heldout, const RiskTable& train_table,
                                const std::vector<EnvSummary>& heldout_summaries) {
  if (heldout.empty()) throw InvalidArgument("fallback_guard: empty held-out set");
  if (!heldout.all_have_outcomes()) {
    throw DataError("fallback_guard: held-out environments need outcomes");
  }
  if (!heldout_summaries.empty() && heldout_summaries.size() != heldout.size()) {
    throw InvalidArgument("fallback_guard: held-out summaries not aligned");
  }
  FallbackDecision d;
  d.fixed_index = best_fixed_index(train_table);
  d.fixed_mask = train_table.library[d.fixed_index];
  const auto& fixed = predictors.at(d.fixed_index);
  double adaptive = 0.0;
  double fixed_total = 0.0;
  for (std::size_t e = 0; e < heldout.size(); ++e) {
    const auto& env = heldout[e];
    const Eigen::VectorXd pred =
        heldout_summaries.empty() ? predict_environment(model, predictors, env)
                                  : predict_environment(model, predictors, env,
                                                        heldout_summaries[e]);
    adaptive += mean_squared_error(*env.outcomes, pred);
    fixed_total += empirical_risk(env, fixed);
  }
  d.adaptive_risk = adaptive / static_cast<double>(heldout.size());
  d.fixed_risk = fixed_total / static_cast<double>(heldout.size());
  d.use_adaptive = d.adaptive_risk < d.fixed_risk;
  return d;
}

}  // namespace eacs
