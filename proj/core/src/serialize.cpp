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

#include "eacs/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eacs/error.hpp"

namespace eacs {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw DataError("model: bad matrix rows");
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = data.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw DataError("model: bad matrix cols");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mlp_json(const Mlp& mlp) {
  json layers = json::array();
  for (const auto& l : mlp.layers) {
    layers.push_back({{"weight", matrix_json(l.weight)}, {"bias", matrix_json(l.bias)}});
  }
  return {{"relu_output", mlp.relu_output}, {"layers", std::move(layers)}};
}

Mlp mlp_from(const json& j) {
  Mlp mlp;
  mlp.relu_output = j.at("relu_output").get<bool>();
  for (const auto& l : j.at("layers")) {
    mlp.layers.push_back({matrix_from(l.at("weight")), matrix_from(l.at("bias"))});
  }
  return mlp;
}

json summary_config_json(const SummaryConfig& c) {
  return {{"include_means", c.include_means},
          {"include_sds", c.include_sds},
          {"include_pairwise_corr", c.include_pairwise_corr},
          {"include_partial_corr", c.include_partial_corr},
          {"shrinkage_alpha_max", c.shrinkage_alpha_max},
          {"standardize_across_envs", c.standardize_across_envs},
          {"keep_features", c.keep_features}};
}

SummaryConfig summary_config_from(const json& j) {
  SummaryConfig c;
  c.include_means = j.at("include_means").get<bool>();
  c.include_sds = j.at("include_sds").get<bool>();
  c.include_pairwise_corr = j.at("include_pairwise_corr").get<bool>();
  c.include_partial_corr = j.at("include_partial_corr").get<bool>();
  c.shrinkage_alpha_max = j.at("shrinkage_alpha_max").get<double>();
  c.standardize_across_envs = j.at("standardize_across_envs").get<bool>();
  c.keep_features = j.at("keep_features").get<std::vector<std::string>>();
  return c;
}

json standardizer_json(const std::optional<SummaryStandardizer>& s) {
  if (!s) return nullptr;
  return {{"features", s->feature_names()},
          {"mean", vector_json(s->mean())},
          {"scale", vector_json(s->scale())}};
}

std::optional<SummaryStandardizer> standardizer_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return SummaryStandardizer(j.at("features").get<std::vector<std::string>>(),
                             vector_from(j.at("mean")), vector_from(j.at("scale")));
}

json header(const std::string& kind) {
  return {{"format", "eacs"}, {"version", kModelFormatVersion}, {"kind", kind}};
}

json parse_checked(const std::string& text, const std::string& kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model: invalid JSON: ") + e.what());
  }
  if (j.value("format", "") != "eacs") throw DataError("model: not an eacs document");
  if (j.value("version", 0) != kModelFormatVersion) {
    throw DataError("model: unsupported format version " + std::to_string(j.value("version", 0)));
  }
  if (!kind.empty() && j.value("kind", "") != kind) {
    throw DataError("model: expected kind '" + kind + "', found '" + j.value("kind", "") + "'");
  }
  return j;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string("model: malformed document: ") + e.what());
  }
}

json predictor_body(const LinearPredictor& p) {
  return {{"mask", p.mask.bit_string()},
          {"intercept", p.intercept},
          {"coefficients", vector_json(p.coefficients)}};
}

LinearPredictor predictor_from(const json& j) {
  LinearPredictor p;
  p.mask = SubsetMask::from_bits(j.at("mask").get<std::string>());
  p.intercept = j.at("intercept").get<double>();
  p.coefficients = vector_from(j.at("coefficients"));
  p.validate();
  return p;
}

}  // namespace

std::string to_json(const LinearPredictor& predictor) {
  json j = header("linear_predictor");
  j["predictor"] = predictor_body(predictor);
  return j.dump(2);
}

LinearPredictor linear_predictor_from_json(const std::string& text) {
  const json j = parse_checked(text, "linear_predictor");
  return guarded([&] { return predictor_from(j.at("predictor")); });
}

std::string to_json(const SelectorModel& m) {
  json j = header("selector");
  json masks = json::array();
  for (const auto& mask : m.class_masks) masks.push_back(mask.bit_string());
  j["selector_kind"] = to_string(m.kind);
  j["rule"] = to_string(m.rule);
  j["class_masks"] = std::move(masks);
  j["constraint"] = m.constraint;
  j["feature_names"] = m.feature_names;
  j["summary_config"] = summary_config_json(m.summary_config);
  j["standardizer"] = standardizer_json(m.standardizer);
  j["network"] = mlp_json(m.network);
  j["final_loss"] = m.final_loss;
  return j.dump(2);
}

SelectorModel selector_from_json(const std::string& text) {
  const json j = parse_checked(text, "selector");
  return guarded([&] {
    SelectorModel m;
    m.kind = parse_selector_kind(j.at("selector_kind").get<std::string>());
    m.rule = parse_prediction_rule(j.at("rule").get<std::string>());
    for (const auto& s : j.at("class_masks")) {
      m.class_masks.push_back(SubsetMask::from_bits(s.get<std::string>()));
    }
    m.constraint = j.at("constraint").get<std::vector<int>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.summary_config = summary_config_from(j.at("summary_config"));
    m.standardizer = standardizer_from(j.at("standardizer"));
    m.network = mlp_from(j.at("network"));
    m.final_loss = j.at("final_loss").get<double>();
    if (m.network.layers.empty() ||
        m.network.output_dim() != static_cast<Eigen::Index>(m.class_masks.size())) {
      throw DataError("model: selector network does not match its class masks");
    }
    return m;
  });
}

std::string to_json(const GateModel& m) {
  json j = header("gate");
  j["context"] = to_string(m.context);
  j["gate"] = m.frozen_gates ? json(nullptr) : mlp_json(m.gate);
  if (m.encoder) {
    j["encoder"] = {{"phi", mlp_json(m.encoder->phi)},
                    {"rho", mlp_json(m.encoder->rho)},
                    {"pooling", m.encoder->pooling == Pooling::kMean ? "mean" : "sum"}};
  } else {
    j["encoder"] = nullptr;
  }
  j["head_weight"] = matrix_json(m.head_weight);
  j["head_bias"] = matrix_json(m.head_bias);
  j["covariate_mean"] = vector_json(m.covariate_mean);
  j["covariate_scale"] = vector_json(m.covariate_scale);
  j["covariate_names"] = m.covariate_names;
  j["feature_names"] = m.feature_names;
  j["summary_config"] = summary_config_json(m.summary_config);
  j["standardizer"] = standardizer_json(m.standardizer);
  j["temperature"] = m.temperature;
  j["constraint"] = m.constraint;
  j["pin_constraint"] = m.pin_constraint;
  j["soft_prior_gamma"] = m.soft_prior_gamma;
  j["l1_gates"] = m.l1_gates;
  j["frozen_gates"] = m.frozen_gates ? vector_json(*m.frozen_gates) : json(nullptr);
  j["loss_trace"] = m.loss_trace;
  return j.dump(2);
}

GateModel gate_from_json(const std::string& text) {
  const json j = parse_checked(text, "gate");
  return guarded([&] {
    GateModel m;
    m.context = parse_gate_context(j.at("context").get<std::string>());
    if (!j.at("gate").is_null()) m.gate = mlp_from(j.at("gate"));
    if (!j.at("encoder").is_null()) {
      const json& e = j.at("encoder");
      m.encoder = SetEncoderModel{mlp_from(e.at("phi")), mlp_from(e.at("rho")),
                                  e.at("pooling").get<std::string>() == "sum" ? Pooling::kSum
                                                                              : Pooling::kMean};
    }
    m.head_weight = matrix_from(j.at("head_weight"));
    m.head_bias = matrix_from(j.at("head_bias"));
    m.covariate_mean = vector_from(j.at("covariate_mean"));
    m.covariate_scale = vector_from(j.at("covariate_scale"));
    m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.summary_config = summary_config_from(j.at("summary_config"));
    m.standardizer = standardizer_from(j.at("standardizer"));
    m.temperature = j.at("temperature").get<double>();
    m.constraint = j.at("constraint").get<std::vector<int>>();
    m.pin_constraint = j.at("pin_constraint").get<bool>();
    m.soft_prior_gamma = j.at("soft_prior_gamma").get<double>();
    m.l1_gates = j.at("l1_gates").get<double>();
    if (!j.at("frozen_gates").is_null()) m.frozen_gates = vector_from(j.at("frozen_gates"));
    m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    return m;
  });
}

std::string model_kind(const std::string& text) {
  return parse_checked(text, "").value("kind", "");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace eacs
