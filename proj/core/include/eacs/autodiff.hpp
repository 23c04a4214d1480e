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

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace eacs::ad {

using Matrix = Eigen::MatrixXd;

/// Handle to a node on a Tape. Only meaningful for the tape that created it.
struct Var {
  std::size_t id = 0;
};

enum class Pool { kMean, kSum };

/// Reverse-mode differentiation over a small set of matrix operators.
///
/// Every operator evaluates eagerly and records a closure that pushes the
/// adjoint of its output to its inputs. Nodes are appended in evaluation
/// order, so a single reverse sweep is a valid topological traversal.
/// Matrices are row-major in meaning: one row per sample or environment.
class Tape {
 public:
  Var constant(Matrix value);
  Var parameter(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Adjoint of `v` after backward(); zero-sized if `v` needs no gradient.
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1; root must be 1x1.
  void backward(Var root);

  /// x * W + 1 b, with W (in x out) and b (1 x out).
  Var affine(Var x, Var weight, Var bias);
  Var relu(Var x);
  /// Element-wise 1 / (1 + exp(-scale * x)).
  Var logistic(Var x, double scale = 1.0);
  /// Overwrites the listed columns with `value`; no gradient flows through them.
  Var pin_columns(Var x, const std::vector<Eigen::Index>& cols, double value);
  Var select_columns(Var x, const std::vector<Eigen::Index>& cols);
  /// Row r of the result is row rows[r] of x.
  Var gather_rows(Var x, std::vector<Eigen::Index> rows);
  /// Pools consecutive row blocks [offsets[k], offsets[k+1]) into row k.
  /// Summation runs in increasing row index.
  Var segment_pool(Var x, std::vector<Eigen::Index> offsets, Pool kind);
  Var hadamard(Var a, Var b);
  Var add(Var a, Var b);
  Var scale(Var a, double c);
  Var log(Var x);
  Var sum(Var x);
  Var sum_squares(Var x);
  /// sum_i w_i (pred_i - target_i)^2 for an n x 1 prediction.
  Var weighted_squared_error(Var pred, Eigen::VectorXd target, Eigen::VectorXd weights);
  /// Mean over rows of -log softmax(logits)[label].
  Var softmax_cross_entropy(Var logits, std::vector<int> labels);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::function<void(std::vector<Node>&, std::size_t)> backward;
  };

  Var push(Matrix value, bool needs_grad,
           std::function<void(std::vector<Node>&, std::size_t)> backward);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  static void accumulate(std::vector<Node>& nodes, std::size_t id, const Matrix& g);

  std::vector<Node> nodes_;
};

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

}  // namespace eacs::ad
