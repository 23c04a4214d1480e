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

#include "eacs/gating.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "eacs/autodiff.hpp"
#include "eacs/csv.hpp"
#include "eacs/error.hpp"

namespace eacs {

std::string to_string(GateContext context) {
  return context == GateContext::kSetEncoder ? "set_encoder" : "summary";
}

GateContext parse_gate_context(const std::string& text) {
  if (text == "summary") return GateContext::kSummary;
  if (text == "set_encoder") return GateContext::kSetEncoder;
  throw InvalidArgument("unknown gate context '" + text + "'");
}

std::string to_string(ConstraintMode mode) {
  return mode == ConstraintMode::kSoft ? "soft" : "hard";
}

ConstraintMode parse_constraint_mode(const std::string& text) {
  if (text == "hard") return ConstraintMode::kHard;
  if (text == "soft") return ConstraintMode::kSoft;
  throw InvalidArgument("unknown constraint mode '" + text + "'");
}

void GateTrainConfig::validate(std::size_t p) const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("gating: learning_rate must be > 0");
  if (max_epochs < 1) throw InvalidArgument("gating: max_epochs must be >= 1");
  if (!(temperature > 0.0)) throw InvalidArgument("gating: temperature must be > 0");
  if (!(soft_prior_gamma >= 0.0)) throw InvalidArgument("gating: soft_prior_gamma must be >= 0");
  if (!(l1_gates >= 0.0)) throw InvalidArgument("gating: l1_gates must be >= 0");
  for (int h : gate_hidden_sizes) {
    if (h < 1) throw InvalidArgument("gating: hidden sizes must be >= 1");
  }
  if (encoder_hidden < 1 || encoder_embedding < 1) {
    throw InvalidArgument("gating: encoder sizes must be >= 1");
  }
  std::set<int> seen;
  for (int j : constraint) {
    if (j < 0 || static_cast<std::size_t>(j) >= p) {
      throw InvalidArgument("gating: constraint index " + std::to_string(j) + " out of range");
    }
    if (!seen.insert(j).second) throw InvalidArgument("gating: duplicate constraint index");
  }
  if (frozen_gates && static_cast<std::size_t>(frozen_gates->size()) != p) {
    throw InvalidArgument("gating: frozen gate width mismatch");
  }
}

LinearPredictor GateModel::effective_predictor(const Eigen::VectorXd& gates) const {
  const auto p = static_cast<Eigen::Index>(num_covariates());
  if (gates.size() != p) throw InvalidArgument("effective_predictor: gate width mismatch");
  LinearPredictor out;
  out.mask = SubsetMask::all(static_cast<std::size_t>(p));
  out.coefficients =
      head_weight.col(0).cwiseProduct(gates).cwiseQuotient(covariate_scale);
  out.intercept = head_bias(0, 0) - out.coefficients.dot(covariate_mean);
  return out;
}

namespace {

std::vector<Eigen::Index> to_index(const std::vector<int>& v) {
  return {v.begin(), v.end()};
}

std::vector<int> pinned_columns(const GateModel& m) {
  return m.pin_constraint ? m.constraint : std::vector<int>{};
}

Eigen::MatrixXd standardize_rows(const GateModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x.rowwise() - m.covariate_mean.transpose();
  return z.array().rowwise() / m.covariate_scale.transpose().array();
}

Eigen::VectorXd summary_context(const GateModel& m, const EnvSummary& summary) {
  if (summary.feature_names != m.feature_names) {
    throw InvalidArgument("gate: summary features do not match the training features");
  }
  return m.standardizer ? m.standardizer->apply(summary.values) : summary.values;
}

}  // namespace

Eigen::VectorXd apply_gate(const Eigen::VectorXd& logits, double temperature,
                           const std::vector<int>& pinned) {
  if (!(temperature > 0.0)) throw InvalidArgument("apply_gate: temperature must be > 0");
  Eigen::VectorXd g = (1.0 + (-logits.array() / temperature).exp()).inverse().matrix();
  for (int j : pinned) g(j) = 1.0;
  return g;
}

namespace {

Eigen::VectorXd frozen_gate(const GateModel& m) {
  Eigen::VectorXd g = *m.frozen_gates;
  for (int j : pinned_columns(m)) g(j) = 1.0;
  return g;
}

}  // namespace

Eigen::VectorXd gate_forward(const GateModel& model, const EnvSummary& summary) {
  if (model.frozen_gates) return frozen_gate(model);
  if (model.context != GateContext::kSummary) {
    throw InvalidArgument("gate_forward: set-encoder gates need the environment's rows");
  }
  const Eigen::VectorXd u = summary_context(model, summary);
  if (u.size() != model.gate.input_dim()) {
    throw InvalidArgument("gate_forward: summary width does not match the gate input");
  }
  const Eigen::VectorXd logits = model.gate.forward(u.transpose()).row(0).transpose();
  return apply_gate(logits, model.temperature, pinned_columns(model));
}

Eigen::VectorXd gate_values(const GateModel& model, const EnvDataset& env,
                            const EnvSummary* summary) {
  if (static_cast<std::size_t>(env.cols()) != model.num_covariates()) {
    throw InvalidArgument("gate: covariate width mismatch");
  }
  if (model.frozen_gates) return frozen_gate(model);
  if (model.context == GateContext::kSummary) {
    if (summary != nullptr) return gate_forward(model, *summary);
    return gate_forward(model, summarize_moments(env, model.summary_config));
  }
  const Eigen::VectorXd emb = set_encode(standardize_rows(model, env.covariates), *model.encoder);
  const Eigen::VectorXd logits = model.gate.forward(emb.transpose()).row(0).transpose();
  return apply_gate(logits, model.temperature, pinned_columns(model));
}

Eigen::VectorXd gate_predict(const GateModel& model, const EnvDataset& env,
                             const EnvSummary* summary) {
  const Eigen::VectorXd g = gate_values(model, env, summary);
  const Eigen::MatrixXd z = standardize_rows(model, env.covariates);
  Eigen::VectorXd out = z * g.cwiseProduct(model.head_weight.col(0));
  out.array() += model.head_bias(0, 0);
  return out;
}

GateBatch make_gate_batch(const GateModel& model, const MultiEnvData& data,
                          const std::vector<EnvSummary>& summaries) {
  if (data.empty()) throw InvalidArgument("soft gating: no environments");
  if (!data.all_have_outcomes()) throw DataError("soft gating: outcomes required");
  if (static_cast<std::size_t>(data.num_covariates()) != model.num_covariates()) {
    throw InvalidArgument("soft gating: covariate width mismatch");
  }
  GateBatch b;
  b.x = standardize_rows(model, data.stacked_covariates());
  b.y = data.stacked_outcomes();
  b.weights.resize(b.x.rows());
  const auto num_envs = static_cast<double>(data.size());
  Eigen::Index offset = 0;
  b.offsets.push_back(0);
  for (std::size_t e = 0; e < data.size(); ++e) {
    const Eigen::Index n = data[e].rows();
    b.weights.segment(offset, n).setConstant(1.0 / (num_envs * static_cast<double>(n)));
    for (Eigen::Index i = 0; i < n; ++i) b.row_env.push_back(static_cast<Eigen::Index>(e));
    offset += n;
    b.offsets.push_back(offset);
  }
  if (model.context == GateContext::kSummary && !model.frozen_gates) {
    if (summaries.size() != data.size()) {
      throw InvalidArgument("soft gating: one summary per environment required");
    }
    b.contexts.resize(static_cast<Eigen::Index>(data.size()), model.gate.input_dim());
    for (std::size_t e = 0; e < summaries.size(); ++e) {
      const Eigen::VectorXd u = summary_context(model, summaries[e]);
      if (u.size() != b.contexts.cols()) {
        throw InvalidArgument("soft gating: summary width does not match the gate input");
      }
      if (!u.allFinite()) throw DataError("soft gating: nonfinite summary");
      b.contexts.row(static_cast<Eigen::Index>(e)) = u.transpose();
    }
  }
  return b;
}

std::vector<Eigen::MatrixXd*> gate_parameter_refs(GateModel& model) {
  std::vector<Eigen::MatrixXd*> refs{&model.head_weight, &model.head_bias};
  if (model.frozen_gates) return refs;
  for (auto* r : parameter_refs(model.gate)) refs.push_back(r);
  if (model.encoder) {
    for (auto* r : parameter_refs(model.encoder->phi)) refs.push_back(r);
    for (auto* r : parameter_refs(model.encoder->rho)) refs.push_back(r);
  }
  return refs;
}

GateObjective gate_objective(const GateModel& model, const GateBatch& batch) {
  ad::Tape tape;
  const ad::Var w = tape.parameter(model.head_weight);
  const ad::Var bias = tape.parameter(model.head_bias);
  std::vector<ad::Var> params{w, bias};
  const auto num_envs = static_cast<Eigen::Index>(batch.offsets.size() - 1);
  const auto p = static_cast<Eigen::Index>(model.num_covariates());

  ad::Var gates;
  if (model.frozen_gates) {
    const Eigen::VectorXd g = frozen_gate(model);
    gates = tape.constant(g.transpose().replicate(num_envs, 1));
  } else {
    ad::Var ctx;
    const MlpVars gate_vars = bind(tape, model.gate);
    if (model.context == GateContext::kSummary) {
      ctx = tape.constant(batch.contexts);
    } else {
      const MlpVars phi = bind(tape, model.encoder->phi);
      const MlpVars rho = bind(tape, model.encoder->rho);
      const ad::Var h = forward(tape, model.encoder->phi, phi, tape.constant(batch.x));
      const ad::Var pooled = tape.segment_pool(
          h, batch.offsets,
          model.encoder->pooling == Pooling::kMean ? ad::Pool::kMean : ad::Pool::kSum);
      ctx = forward(tape, model.encoder->rho, rho, pooled);
      params.insert(params.end(), gate_vars.params.begin(), gate_vars.params.end());
      params.insert(params.end(), phi.params.begin(), phi.params.end());
      params.insert(params.end(), rho.params.begin(), rho.params.end());
    }
    if (model.context == GateContext::kSummary) {
      params.insert(params.end(), gate_vars.params.begin(), gate_vars.params.end());
    }
    const ad::Var logits = forward(tape, model.gate, gate_vars, ctx);
    gates = tape.logistic(logits, 1.0 / model.temperature);
    if (model.pin_constraint && !model.constraint.empty()) {
      gates = tape.pin_columns(gates, to_index(model.constraint), 1.0);
    }
  }

  const ad::Var rows = tape.gather_rows(gates, batch.row_env);
  const ad::Var gated = tape.hadamard(tape.constant(batch.x), rows);
  const ad::Var pred = tape.affine(gated, w, bias);
  ad::Var loss = tape.weighted_squared_error(pred, batch.y, batch.weights);

  const double inv_envs = 1.0 / static_cast<double>(num_envs);
  if (model.soft_prior_gamma > 0.0 && !model.constraint.empty() && !model.frozen_gates) {
    const ad::Var logs = tape.log(tape.select_columns(gates, to_index(model.constraint)));
    loss = tape.add(loss, tape.scale(tape.sum(logs), -model.soft_prior_gamma * inv_envs));
  }
  if (model.l1_gates > 0.0 && !model.frozen_gates) {
    std::vector<Eigen::Index> free;
    const std::set<int> pinned(model.constraint.begin(), model.constraint.end());
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!model.pin_constraint || !pinned.count(static_cast<int>(j))) free.push_back(j);
    }
    if (!free.empty()) {
      loss = tape.add(loss, tape.scale(tape.sum(tape.select_columns(gates, free)),
                                       model.l1_gates * inv_envs));
    }
  }

  tape.backward(loss);
  GateObjective out;
  out.loss = tape.scalar(loss);
  for (const auto& v : params) out.grads.push_back(tape.grad(v));
  const Eigen::VectorXd resid = tape.value(pred).col(0) - batch.y;
  out.env_losses.resize(num_envs);
  for (Eigen::Index e = 0; e < num_envs; ++e) {
    const Eigen::Index a = batch.offsets[static_cast<std::size_t>(e)];
    const Eigen::Index n = batch.offsets[static_cast<std::size_t>(e) + 1] - a;
    out.env_losses(e) = resid.segment(a, n).squaredNorm() / static_cast<double>(n);
  }
  return out;
}

namespace {

// Exact weighted least squares for the head under fixed per-environment gates.
void solve_head(GateModel& model, const GateBatch& batch, const Eigen::MatrixXd& env_gates) {
  const Eigen::Index n = batch.x.rows();
  const Eigen::Index p = batch.x.cols();
  Eigen::MatrixXd design(n, p + 1);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sqrt(batch.weights(i));
    design(i, 0) = s;
    design.row(i).tail(p) =
        s * batch.x.row(i).cwiseProduct(env_gates.row(batch.row_env[static_cast<std::size_t>(i)]));
    target(i) = s * batch.y(i);
  }
  const Eigen::VectorXd b = min_norm_least_squares(design, target);
  model.head_bias(0, 0) = b(0);
  model.head_weight.col(0) = b.tail(p);
}

}  // namespace

GateModel train_soft_gating(const MultiEnvData& data, const std::vector<EnvSummary>& summaries,
                            const GateTrainConfig& cfg, const SummaryConfig& summary_config) {
  if (data.empty()) throw InvalidArgument("train_soft_gating: no environments");
  const auto p = static_cast<std::size_t>(data.num_covariates());
  cfg.validate(p);

  GateModel model;
  model.context = cfg.context;
  model.covariate_names = data.covariate_names();
  model.summary_config = summary_config;
  model.temperature = cfg.temperature;
  model.constraint = cfg.constraint;
  model.pin_constraint = cfg.constraint_mode == ConstraintMode::kHard;
  model.soft_prior_gamma = cfg.soft_prior_gamma;
  model.l1_gates = cfg.l1_gates;
  model.frozen_gates = cfg.frozen_gates;

  const Eigen::MatrixXd x = data.stacked_covariates();
  const auto n_rows = static_cast<double>(x.rows());
  model.covariate_mean = x.colwise().mean().transpose();
  model.covariate_scale.resize(static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
    const double sd =
        std::sqrt((x.col(j).array() - model.covariate_mean(j)).square().sum() / n_rows);
    model.covariate_scale(j) = sd > 0.0 ? sd : 1.0;
  }
  model.head_weight = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), 1);
  model.head_bias = Eigen::MatrixXd::Zero(1, 1);

  int context_dim = 0;
  if (cfg.context == GateContext::kSummary) {
    if (!cfg.frozen_gates) {
      if (summaries.size() != data.size()) {
        throw InvalidArgument("train_soft_gating: one summary per environment required");
      }
      model.feature_names = summaries.front().feature_names;
      model.standardizer = SummaryStandardizer::fit(summaries);
      context_dim = static_cast<int>(summaries.front().size());
    }
  } else {
    Engine enc_engine = make_engine(StreamKey{cfg.seed, 0, StreamRole::kModel, 2});
    model.encoder = SetEncoderModel::init(static_cast<int>(p), cfg.encoder_hidden,
                                          cfg.encoder_embedding, cfg.encoder_pooling, enc_engine);
    context_dim = cfg.encoder_embedding;
  }
  if (!cfg.frozen_gates) {
    Engine engine = make_engine(StreamKey{cfg.seed, 0, StreamRole::kModel, 1});
    std::vector<int> sizes{context_dim};
    sizes.insert(sizes.end(), cfg.gate_hidden_sizes.begin(), cfg.gate_hidden_sizes.end());
    sizes.push_back(static_cast<int>(p));
    model.gate = Mlp::glorot(sizes, engine, /*zero_last=*/true);
  }

  const GateBatch batch = make_gate_batch(model, data, summaries);
  const auto num_envs = static_cast<Eigen::Index>(data.size());

  // Warm start: exact head for the initial gates (frozen, or 0.5 with pins).
  Eigen::VectorXd g0 = cfg.frozen_gates ? frozen_gate(model)
                                        : apply_gate(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p)),
                                                     model.temperature, pinned_columns(model));
  solve_head(model, batch, g0.transpose().replicate(num_envs, 1));

  GateObjective obj = gate_objective(model, batch);
  if (!std::isfinite(obj.loss)) throw NumericalError("train_soft_gating: nonfinite loss at epoch 0");
  model.loss_trace.push_back(obj.loss);
  if (cfg.frozen_gates) return model;

  auto params = gate_parameter_refs(model);
  Adam adam(params, AdamOptions{cfg.learning_rate});
  Adam::State accepted = adam.snapshot();
  std::vector<Eigen::MatrixXd> grads = std::move(obj.grads);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    adam.step(grads);
    GateObjective cand = gate_objective(model, batch);
    if (std::isfinite(cand.loss) && cand.loss <= model.loss_trace.back()) {
      model.loss_trace.push_back(cand.loss);
      accepted = adam.snapshot();
      grads = std::move(cand.grads);
      continue;
    }
    adam.restore(accepted);
    adam.set_learning_rate(0.5 * adam.learning_rate());
    if (adam.learning_rate() < 1e-12 * cfg.learning_rate) {
      if (!std::isfinite(cand.loss)) {
        throw NumericalError("train_soft_gating: nonfinite loss at epoch " +
                             std::to_string(epoch));
      }
      break;
    }
  }
  return model;
}

void write_gates_csv(const std::string& path, const GateModel& model, const MultiEnvData& data,
                     const std::vector<EnvSummary>& summaries) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  CsvWriter w(out);
  w.field("env_id");
  for (const auto& name : model.covariate_names) w.field("gate[" + name + "]");
  w.end_row();
  for (std::size_t e = 0; e < data.size(); ++e) {
    const EnvSummary* s = summaries.size() == data.size() ? &summaries[e] : nullptr;
    const Eigen::VectorXd g = gate_values(model, data[e], s);
    w.field(data[e].env_id);
    for (Eigen::Index j = 0; j < g.size(); ++j) w.field(g(j));
    w.end_row();
  }
}

}  // namespace eacs
