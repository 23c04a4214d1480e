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

#include "eacs/autodiff.hpp"

#include <cmath>

#include "eacs/error.hpp"

namespace eacs::ad {

namespace {

double stable_logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Var Tape::push(Matrix value, bool needs_grad,
               std::function<void(std::vector<Node>&, std::size_t)> backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), needs_grad, std::move(backward)});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(std::vector<Node>& nodes, std::size_t id, const Matrix& g) {
  Node& n = nodes[id];
  if (!n.needs_grad) return;
  n.grad += g;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Matrix value) { return push(std::move(value), true, nullptr); }

void Tape::backward(Var root) {
  if (nodes_[root.id].value.size() != 1) {
    throw InvalidArgument("backward: root must be a scalar node");
  }
  for (auto& n : nodes_) {
    if (n.needs_grad) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  if (!nodes_[root.id].needs_grad) return;
  nodes_[root.id].grad(0, 0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backward) n.backward(nodes_, i);
  }
}

Var Tape::affine(Var x, Var weight, Var bias) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(weight);
  const Matrix& bv = value(bias);
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw InvalidArgument("affine: shape mismatch");
  }
  Matrix out = xv * wv;
  out.rowwise() += bv.row(0);
  const bool ng = needs(x) || needs(weight) || needs(bias);
  return push(std::move(out), ng, [x, weight, bias](std::vector<Node>& nodes, std::size_t self) {
    const Matrix& g = nodes[self].grad;
    if (nodes[x.id].needs_grad) accumulate(nodes, x.id, g * nodes[weight.id].value.transpose());
    if (nodes[weight.id].needs_grad) {
      accumulate(nodes, weight.id, nodes[x.id].value.transpose() * g);
    }
    if (nodes[bias.id].needs_grad) accumulate(nodes, bias.id, g.colwise().sum());
  });
}

Var Tape::relu(Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  return push(std::move(out), needs(x), [x](std::vector<Node>& nodes, std::size_t self) {
    const Matrix mask = (nodes[x.id].value.array() > 0.0).cast<double>().matrix();
    accumulate(nodes, x.id, nodes[self].grad.cwiseProduct(mask));
  });
}

Var Tape::logistic(Var x, double scale) {
  Matrix out = value(x).unaryExpr([scale](double t) { return stable_logistic(scale * t); });
  return push(std::move(out), needs(x), [x, scale](std::vector<Node>& nodes, std::size_t self) {
    const Matrix& s = nodes[self].value;
    const Matrix local = (s.array() * (1.0 - s.array()) * scale).matrix();
    accumulate(nodes, x.id, nodes[self].grad.cwiseProduct(local));
  });
}

Var Tape::pin_columns(Var x, const std::vector<Eigen::Index>& cols, double pinned) {
  Matrix out = value(x);
  for (auto c : cols) {
    if (c < 0 || c >= out.cols()) throw InvalidArgument("pin_columns: column out of range");
    out.col(c).setConstant(pinned);
  }
  return push(std::move(out), needs(x), [x, cols](std::vector<Node>& nodes, std::size_t self) {
    Matrix g = nodes[self].grad;
    for (auto c : cols) g.col(c).setZero();
    accumulate(nodes, x.id, g);
  });
}

Var Tape::select_columns(Var x, const std::vector<Eigen::Index>& cols) {
  const Matrix& xv = value(x);
  Matrix out(xv.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] < 0 || cols[k] >= xv.cols()) {
      throw InvalidArgument("select_columns: column out of range");
    }
    out.col(static_cast<Eigen::Index>(k)) = xv.col(cols[k]);
  }
  return push(std::move(out), needs(x), [x, cols](std::vector<Node>& nodes, std::size_t self) {
    const Matrix& g = nodes[self].grad;
    Matrix full = Matrix::Zero(nodes[x.id].value.rows(), nodes[x.id].value.cols());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      full.col(cols[k]) += g.col(static_cast<Eigen::Index>(k));
    }
    accumulate(nodes, x.id, full);
  });
}

Var Tape::gather_rows(Var x, std::vector<Eigen::Index> rows) {
  const Matrix& xv = value(x);
  Matrix out(static_cast<Eigen::Index>(rows.size()), xv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= xv.rows()) {
      throw InvalidArgument("gather_rows: row out of range");
    }
    out.row(static_cast<Eigen::Index>(r)) = xv.row(rows[r]);
  }
  return push(std::move(out), needs(x),
              [x, rows = std::move(rows)](std::vector<Node>& nodes, std::size_t self) {
                const Matrix& g = nodes[self].grad;
                Matrix full = Matrix::Zero(nodes[x.id].value.rows(), nodes[x.id].value.cols());
                for (std::size_t r = 0; r < rows.size(); ++r) {
                  full.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
                }
                accumulate(nodes, x.id, full);
              });
}

Var Tape::segment_pool(Var x, std::vector<Eigen::Index> offsets, Pool kind) {
  const Matrix& xv = value(x);
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != xv.rows()) {
    throw InvalidArgument("segment_pool: offsets must span all rows");
  }
  const auto segments = static_cast<Eigen::Index>(offsets.size() - 1);
  Matrix out = Matrix::Zero(segments, xv.cols());
  for (Eigen::Index k = 0; k < segments; ++k) {
    const auto begin = offsets[k];
    const auto end = offsets[k + 1];
    if (end <= begin) throw InvalidArgument("segment_pool: empty segment");
    for (Eigen::Index r = begin; r < end; ++r) out.row(k) += xv.row(r);
    if (kind == Pool::kMean) out.row(k) /= static_cast<double>(end - begin);
  }
  return push(std::move(out), needs(x),
              [x, offsets = std::move(offsets), kind](std::vector<Node>& nodes,
                                                      std::size_t self) {
                const Matrix& g = nodes[self].grad;
                Matrix full(nodes[x.id].value.rows(), nodes[x.id].value.cols());
                for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
                  const auto begin = offsets[k];
                  const auto end = offsets[k + 1];
                  const double w =
                      kind == Pool::kMean ? 1.0 / static_cast<double>(end - begin) : 1.0;
                  for (Eigen::Index r = begin; r < end; ++r) {
                    full.row(r) = w * g.row(static_cast<Eigen::Index>(k));
                  }
                }
                accumulate(nodes, x.id, full);
              });
}

Var Tape::hadamard(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw InvalidArgument("hadamard: shape mismatch");
  }
  Matrix out = value(a).cwiseProduct(value(b));
  return push(std::move(out), needs(a) || needs(b),
              [a, b](std::vector<Node>& nodes, std::size_t self) {
                const Matrix& g = nodes[self].grad;
                if (nodes[a.id].needs_grad) {
                  accumulate(nodes, a.id, g.cwiseProduct(nodes[b.id].value));
                }
                if (nodes[b.id].needs_grad) {
                  accumulate(nodes, b.id, g.cwiseProduct(nodes[a.id].value));
                }
              });
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw InvalidArgument("add: shape mismatch");
  }
  Matrix out = value(a) + value(b);
  return push(std::move(out), needs(a) || needs(b),
              [a, b](std::vector<Node>& nodes, std::size_t self) {
                accumulate(nodes, a.id, nodes[self].grad);
                accumulate(nodes, b.id, nodes[self].grad);
              });
}

Var Tape::scale(Var a, double c) {
  Matrix out = c * value(a);
  return push(std::move(out), needs(a), [a, c](std::vector<Node>& nodes, std::size_t self) {
    accumulate(nodes, a.id, c * nodes[self].grad);
  });
}

Var Tape::log(Var x) {
  Matrix out = value(x).array().log().matrix();
  return push(std::move(out), needs(x), [x](std::vector<Node>& nodes, std::size_t self) {
    accumulate(nodes, x.id, nodes[self].grad.cwiseQuotient(nodes[x.id].value));
  });
}

Var Tape::sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).sum();
  return push(std::move(out), needs(x), [x](std::vector<Node>& nodes, std::size_t self) {
    const double g = nodes[self].grad(0, 0);
    accumulate(nodes, x.id,
               Matrix::Constant(nodes[x.id].value.rows(), nodes[x.id].value.cols(), g));
  });
}

Var Tape::sum_squares(Var x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).squaredNorm();
  return push(std::move(out), needs(x), [x](std::vector<Node>& nodes, std::size_t self) {
    accumulate(nodes, x.id, 2.0 * nodes[self].grad(0, 0) * nodes[x.id].value);
  });
}

Var Tape::weighted_squared_error(Var pred, Eigen::VectorXd target, Eigen::VectorXd weights) {
  const Matrix& pv = value(pred);
  if (pv.cols() != 1 || pv.rows() != target.size() || target.size() != weights.size()) {
    throw InvalidArgument("weighted_squared_error: shape mismatch");
  }
  Eigen::VectorXd resid = pv.col(0) - target;
  Matrix out(1, 1);
  out(0, 0) = (weights.array() * resid.array().square()).sum();
  return push(std::move(out), needs(pred),
              [pred, resid = std::move(resid), weights = std::move(weights)](
                  std::vector<Node>& nodes, std::size_t self) {
                const double g = nodes[self].grad(0, 0);
                Matrix local = (2.0 * g * weights.array() * resid.array()).matrix();
                accumulate(nodes, pred.id, local);
              });
}

Var Tape::softmax_cross_entropy(Var logits, std::vector<int> labels) {
  const Matrix& lv = value(logits);
  if (static_cast<Eigen::Index>(labels.size()) != lv.rows() || lv.rows() == 0) {
    throw InvalidArgument("softmax_cross_entropy: label count mismatch");
  }
  Matrix probs = softmax_rows(lv);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    const int c = labels[static_cast<std::size_t>(r)];
    if (c < 0 || c >= lv.cols()) throw InvalidArgument("softmax_cross_entropy: bad label");
    const double m = lv.row(r).maxCoeff();
    const double lse = m + std::log((lv.row(r).array() - m).exp().sum());
    loss += lse - lv(r, c);
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(lv.rows());
  return push(std::move(out), needs(logits),
              [logits, labels = std::move(labels), probs = std::move(probs)](
                  std::vector<Node>& nodes, std::size_t self) {
                const double g = nodes[self].grad(0, 0) / static_cast<double>(probs.rows());
                Matrix local = probs;
                for (Eigen::Index r = 0; r < local.rows(); ++r) {
                  local(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
                }
                accumulate(nodes, logits.id, g * local);
              });
}

}  // namespace eacs::ad
