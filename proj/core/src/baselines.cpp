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

#include "eacs/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include "eacs/error.hpp"

namespace eacs {

namespace {

void require_training(const MultiEnvData& data, const char* who, std::size_t min_envs) {
  if (data.size() < min_envs) {
    throw InvalidArgument(std::string(who) + ": needs at least " + std::to_string(min_envs) +
                          " environment(s)");
  }
  if (!data.all_have_outcomes()) throw DataError(std::string(who) + ": outcomes required");
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

void LassoConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lasso: lambda must be >= 0");
  if (max_iters < 1) throw InvalidArgument("lasso: max_iters must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidArgument("lasso: tolerance must be > 0");
}

LassoFit fit_lasso_path(const MultiEnvData& data, const LassoConfig& cfg) {
  cfg.validate();
  require_training(data, "fit_lasso", 1);
  const Eigen::MatrixXd x_raw = data.stacked_covariates();
  const Eigen::VectorXd y = data.stacked_outcomes();
  const auto n = static_cast<double>(x_raw.rows());
  const Eigen::Index p = x_raw.cols();

  const Eigen::RowVectorXd mean = x_raw.colwise().mean();
  Eigen::MatrixXd x = x_raw.rowwise() - mean;
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd = std::sqrt(x.col(j).squaredNorm() / n);
    scale(j) = sd > 0.0 ? sd : 1.0;
    x.col(j) /= scale(j);
  }
  const double y_mean = y.mean();
  Eigen::VectorXd resid = y.array() - y_mean;
  Eigen::VectorXd col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j) col_sq(j) = x.col(j).squaredNorm() / n;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto objective = [&] {
    return 0.5 * resid.squaredNorm() / n + cfg.lambda * beta.lpNorm<1>();
  };

  LassoFit fit;
  double max_change = 0.0;
  bool converged = false;
  for (int sweep = 0; sweep < cfg.max_iters; ++sweep) {
    max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double old = beta(j);
      const double rho = x.col(j).dot(resid) / n + col_sq(j) * old;
      const double updated = soft_threshold(rho, cfg.lambda) / col_sq(j);
      if (updated != old) {
        resid -= (updated - old) * x.col(j);
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    fit.objective_trace.push_back(objective());
    fit.sweeps = sweep + 1;
    if (max_change < cfg.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("fit_lasso: no convergence after " + std::to_string(cfg.max_iters) +
                         " sweeps (last max coefficient change " + std::to_string(max_change) +
                         ")");
  }

  LinearPredictor& out = fit.predictor;
  out.mask = SubsetMask::all(static_cast<std::size_t>(p));
  out.coefficients = beta.cwiseQuotient(scale);
  out.intercept = y_mean - mean.dot(out.coefficients);
  return fit;
}

LinearPredictor fit_lasso(const MultiEnvData& data, const LassoConfig& cfg) {
  return fit_lasso_path(data, cfg).predictor;
}

void AnchorConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("anchor: gamma must be >= 0");
  }
}

namespace {

// Rows of `m` replaced by their environment means (P_A m).
Eigen::MatrixXd project_on_anchors(const MultiEnvData& data, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  Eigen::Index offset = 0;
  for (const auto& env : data.environments()) {
    const Eigen::Index n = env.rows();
    const Eigen::RowVectorXd mu = m.middleRows(offset, n).colwise().mean();
    out.middleRows(offset, n).rowwise() = mu;
    offset += n;
  }
  return out;
}

}  // namespace

LinearPredictor fit_anchor(const MultiEnvData& data, const AnchorConfig& cfg) {
  cfg.validate();
  require_training(data, "fit_anchor", 2);
  const Eigen::Index p = data.num_covariates();
  Eigen::MatrixXd design(data.total_rows(), p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = data.stacked_covariates();
  Eigen::MatrixXd y = data.stacked_outcomes();
  const double k = std::sqrt(cfg.gamma) - 1.0;
  if (k != 0.0) {
    design += k * project_on_anchors(data, design);
    y += k * project_on_anchors(data, y);
  }
  const Eigen::VectorXd b = min_norm_least_squares(design, y.col(0));
  LinearPredictor out;
  out.mask = SubsetMask::all(static_cast<std::size_t>(p));
  out.intercept = b(0);
  out.coefficients = b.tail(p);
  return out;
}

double anchor_objective(const MultiEnvData& data, const LinearPredictor& predictor,
                        double gamma) {
  require_training(data, "anchor_objective", 1);
  Eigen::MatrixXd r = data.stacked_outcomes() - predictor.predict(data.stacked_covariates());
  const Eigen::MatrixXd pr = project_on_anchors(data, r);
  return (r - pr).squaredNorm() + gamma * pr.squaredNorm();
}

void IcpConfig::validate() const {
  if (!(alpha_threshold > 0.0 && alpha_threshold < 1.0)) {
    throw InvalidArgument("icp: alpha_threshold must lie in (0, 1)");
  }
}

namespace {

double rss(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  const Eigen::VectorXd b = min_norm_least_squares(design, y);
  return (y - design * b).squaredNorm();
}

Eigen::Index matrix_rank(const Eigen::MatrixXd& m) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
  return cod.rank();
}

}  // namespace

IcpMaskResult icp_test(const MultiEnvData& data, const SubsetMask& mask, const IcpConfig& cfg) {
  cfg.validate();
  require_training(data, "icp_test", 2);
  IcpMaskResult res;
  res.mask = mask;
  const Eigen::MatrixXd x = data.stacked_covariates();
  const Eigen::VectorXd y = data.stacked_outcomes();
  const auto active = mask.active();
  const Eigen::Index n = x.rows();
  const auto k = static_cast<Eigen::Index>(active.size());
  const auto num_envs = static_cast<Eigen::Index>(data.size());

  Eigen::MatrixXd reduced(n, 1 + k);
  reduced.col(0).setOnes();
  for (Eigen::Index c = 0; c < k; ++c) reduced.col(1 + c) = x.col(active[c]);
  const Eigen::Index rank_reduced = matrix_rank(reduced);
  const double rss_reduced = rss(reduced, y);

  // The full model is block structured, so it is fitted environment-wise:
  // environment intercepts reduce to within-environment centering, and
  // interactions to a separate fit per environment.
  Eigen::Index rank_full = 0;
  double rss_full = 0.0;
  if (cfg.interactions) {
    Eigen::Index offset = 0;
    for (Eigen::Index e = 0; e < num_envs; ++e) {
      const Eigen::Index ne = data[static_cast<std::size_t>(e)].rows();
      const Eigen::MatrixXd block = reduced.middleRows(offset, ne);
      const Eigen::VectorXd ye = y.segment(offset, ne);
      rank_full += matrix_rank(block);
      rss_full += rss(block, ye);
      offset += ne;
    }
  } else {
    Eigen::MatrixXd xc = reduced.rightCols(k);
    Eigen::VectorXd yc = y;
    Eigen::Index offset = 0;
    for (Eigen::Index e = 0; e < num_envs; ++e) {
      const Eigen::Index ne = data[static_cast<std::size_t>(e)].rows();
      if (k > 0) {
        xc.middleRows(offset, ne).rowwise() -= xc.middleRows(offset, ne).colwise().mean();
      }
      yc.segment(offset, ne).array() -= yc.segment(offset, ne).mean();
      offset += ne;
    }
    rank_full = num_envs + (k > 0 ? matrix_rank(xc) : 0);
    rss_full = k > 0 ? rss(xc, yc) : yc.squaredNorm();
  }

  const Eigen::Index df1 = rank_full - rank_reduced;
  const Eigen::Index df2 = n - rank_full;
  if (df1 < 1 || df2 < 1) return res;
  if (!(rss_full > 0.0)) return res;
  const double f = std::max(0.0, (rss_reduced - rss_full) / static_cast<double>(df1)) /
                   (rss_full / static_cast<double>(df2));
  if (!std::isfinite(f)) return res;
  res.tested = true;
  res.f_statistic = f;
  boost::math::fisher_f dist(static_cast<double>(df1), static_cast<double>(df2));
  res.p_value = boost::math::cdf(boost::math::complement(dist, f));
  res.passed = res.p_value > cfg.alpha_threshold;
  return res;
}

IcpResult icp_run(const MultiEnvData& data, const SubsetLibrary& library, const IcpConfig& cfg) {
  cfg.validate();
  require_training(data, "icp_select", 2);
  const std::size_t p = static_cast<std::size_t>(data.num_covariates());
  IcpResult out;
  std::optional<SubsetMask> acc;
  for (const auto& mask : library.masks()) {
    if (mask.count() == 0) continue;
    IcpMaskResult r = icp_test(data, mask, cfg);
    if (!r.tested) {
      out.warnings.push_back("mask " + mask.bit_string() +
                             " skipped: insufficient residual degrees of freedom");
    } else if (r.passed) {
      acc = acc ? acc->intersect(mask) : mask;
    }
    out.per_mask.push_back(std::move(r));
  }
  out.selected = acc ? *acc : SubsetMask::none(p);
  return out;
}

SubsetMask icp_select(const MultiEnvData& data, const SubsetLibrary& library,
                      const IcpConfig& cfg) {
  return icp_run(data, library, cfg).selected;
}

}  // namespace eacs
