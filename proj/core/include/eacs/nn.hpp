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

#include <vector>

#include <Eigen/Core>

#include "eacs/autodiff.hpp"
#include "eacs/rng.hpp"

namespace eacs {

struct DenseLayer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::MatrixXd bias;    // 1 x out
};

/// Fully connected ReLU network. ReLU follows every layer except the last,
/// and the last too when `relu_output` is set.
struct Mlp {
  std::vector<DenseLayer> layers;
  bool relu_output = false;

  /// sizes = {input, hidden..., output}. Weights are Glorot-uniform in
  /// +-sqrt(6 / (fan_in + fan_out)), biases zero. With `zero_last` the output
  /// layer starts at exactly zero.
  static Mlp glorot(const std::vector<int>& sizes, Engine& engine, bool zero_last = false,
                    bool relu_output = false);

  Eigen::Index input_dim() const { return layers.front().weight.rows(); }
  Eigen::Index output_dim() const { return layers.back().weight.cols(); }
  std::size_t parameter_count() const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
};

/// Tape handles for one Mlp's parameters, in layer order (weight, bias).
struct MlpVars {
  std::vector<ad::Var> params;
};

MlpVars bind(ad::Tape& tape, const Mlp& mlp);
ad::Var forward(ad::Tape& tape, const Mlp& mlp, const MlpVars& vars, ad::Var x);

/// Mutable views of an Mlp's parameters, matching MlpVars order.
std::vector<Eigen::MatrixXd*> parameter_refs(Mlp& mlp);

Eigen::VectorXd flatten(const std::vector<Eigen::MatrixXd*>& params);
Eigen::VectorXd flatten(const std::vector<Eigen::MatrixXd>& params);
void unflatten(const Eigen::VectorXd& flat, const std::vector<Eigen::MatrixXd*>& params);

struct AdamOptions {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer over a fixed list of parameter matrices.
class Adam {
 public:
  Adam(std::vector<Eigen::MatrixXd*> params, AdamOptions options);

  void step(const std::vector<Eigen::MatrixXd>& grads);

  struct State {
    std::vector<Eigen::MatrixXd> values;
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
    long long t = 0;
  };
  State snapshot() const;
  void restore(const State& state);

  double learning_rate() const { return options_.learning_rate; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  std::vector<Eigen::MatrixXd*> params_;
  AdamOptions options_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  long long t_ = 0;
};

}  // namespace eacs
