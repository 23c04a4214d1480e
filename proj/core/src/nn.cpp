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

#include "eacs/nn.hpp"

#include <cmath>

#include "eacs/error.hpp"

namespace eacs {

Mlp Mlp::glorot(const std::vector<int>& sizes, Engine& engine, bool zero_last,
                bool relu_output) {
  if (sizes.size() < 2) throw InvalidArgument("Mlp::glorot: need at least two sizes");
  Mlp mlp;
  mlp.relu_output = relu_output;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const int fan_in = sizes[k];
    const int fan_out = sizes[k + 1];
    if (fan_in < 1 || fan_out < 1) throw InvalidArgument("Mlp::glorot: sizes must be >= 1");
    DenseLayer layer;
    layer.weight.resize(fan_in, fan_out);
    layer.bias = Eigen::MatrixXd::Zero(1, fan_out);
    const bool last = k + 2 == sizes.size();
    if (last && zero_last) {
      layer.weight.setZero();
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> uniform(-limit, limit);
      // Column-major fill order keeps the draw sequence stable.
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
          layer.weight(i, j) = uniform(engine);
        }
      }
    }
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Eigen::MatrixXd next = h * layers[k].weight;
    next.rowwise() += layers[k].bias.row(0);
    if (k + 1 < layers.size() || relu_output) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

MlpVars bind(ad::Tape& tape, const Mlp& mlp) {
  MlpVars vars;
  for (const auto& l : mlp.layers) {
    vars.params.push_back(tape.parameter(l.weight));
    vars.params.push_back(tape.parameter(l.bias));
  }
  return vars;
}

ad::Var forward(ad::Tape& tape, const Mlp& mlp, const MlpVars& vars, ad::Var x) {
  ad::Var h = x;
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    h = tape.affine(h, vars.params[2 * k], vars.params[2 * k + 1]);
    if (k + 1 < mlp.layers.size() || mlp.relu_output) h = tape.relu(h);
  }
  return h;
}

std::vector<Eigen::MatrixXd*> parameter_refs(Mlp& mlp) {
  std::vector<Eigen::MatrixXd*> refs;
  for (auto& l : mlp.layers) {
    refs.push_back(&l.weight);
    refs.push_back(&l.bias);
  }
  return refs;
}

Eigen::VectorXd flatten(const std::vector<Eigen::MatrixXd*>& params) {
  Eigen::Index total = 0;
  for (const auto* p : params) total += p->size();
  Eigen::VectorXd flat(total);
  Eigen::Index offset = 0;
  for (const auto* p : params) {
    flat.segment(offset, p->size()) = Eigen::Map<const Eigen::VectorXd>(p->data(), p->size());
    offset += p->size();
  }
  return flat;
}

Eigen::VectorXd flatten(const std::vector<Eigen::MatrixXd>& params) {
  std::vector<Eigen::MatrixXd*> refs;
  for (const auto& p : params) refs.push_back(const_cast<Eigen::MatrixXd*>(&p));
  return flatten(refs);
}

void unflatten(const Eigen::VectorXd& flat, const std::vector<Eigen::MatrixXd*>& params) {
  Eigen::Index offset = 0;
  for (auto* p : params) {
    if (offset + p->size() > flat.size()) throw InvalidArgument("unflatten: vector too short");
    Eigen::Map<Eigen::VectorXd>(p->data(), p->size()) = flat.segment(offset, p->size());
    offset += p->size();
  }
  if (offset != flat.size()) throw InvalidArgument("unflatten: vector too long");
}

Adam::Adam(std::vector<Eigen::MatrixXd*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto* p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
}

void Adam::step(const std::vector<Eigen::MatrixXd>& grads) {
  if (grads.size() != params_.size()) throw InvalidArgument("Adam::step: gradient count");
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    m_[k] = options_.beta1 * m_[k] + (1.0 - options_.beta1) * grads[k];
    v_[k] = options_.beta2 * v_[k] + (1.0 - options_.beta2) * grads[k].cwiseAbs2();
    const auto m_hat = m_[k].array() / bc1;
    const auto v_hat = v_[k].array() / bc2;
    params_[k]->array() -= options_.learning_rate * m_hat / (v_hat.sqrt() + options_.epsilon);
  }
}

Adam::State Adam::snapshot() const {
  State s;
  for (const auto* p : params_) s.values.push_back(*p);
  s.m = m_;
  s.v = v_;
  s.t = t_;
  return s;
}

void Adam::restore(const State& state) {
  for (std::size_t k = 0; k < params_.size(); ++k) *params_[k] = state.values[k];
  m_ = state.m;
  v_ = state.v;
  t_ = state.t;
}

}  // namespace eacs
