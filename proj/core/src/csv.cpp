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

#include "eacs/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>

#include "eacs/error.hpp"

namespace eacs {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

CsvWriter& CsvWriter::field(std::string_view text) {
  if (!first_) out_ << ',';
  first_ = false;
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) {
    out_ << text;
    return *this;
  }
  out_ << '"';
  for (char c : text) {
    if (c == '"') out_ << '"';
    out_ << c;
  }
  out_ << '"';
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(long long value) { return field(std::to_string(value)); }

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (const auto& f : fields) field(f);
  end_row();
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  out.push_back(std::move(current));
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string text = trim(raw);
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "row " << row << ", column '" << column << "': non-numeric value '" << raw
        << "'";
    throw DataError(msg.str());
  }
  return value;
}

}  // namespace

MultiEnvData parse_multi_env_csv(std::istream& in, const std::string& env_column,
                                 const std::optional<std::string>& outcome_column) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw DataError("row 1: empty file (no header row)");
  }
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto find_column = [&](const std::string& name) -> std::ptrdiff_t {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<std::ptrdiff_t>(j);
    }
    return -1;
  };
  const auto env_idx = find_column(env_column);
  if (env_idx < 0) throw DataError("row 1: missing environment column '" + env_column + "'");
  std::ptrdiff_t outcome_idx = -1;
  if (outcome_column) {
    outcome_idx = find_column(*outcome_column);
    if (outcome_idx < 0) {
      throw DataError("row 1: missing outcome column '" + *outcome_column + "'");
    }
  }
  std::vector<std::size_t> covariate_cols;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) == env_idx ||
        static_cast<std::ptrdiff_t>(j) == outcome_idx) {
      continue;
    }
    covariate_cols.push_back(j);
    names.push_back(header[j]);
  }
  if (covariate_cols.empty()) throw DataError("row 1: no covariate columns");

  struct Accumulator {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
  };
  std::vector<std::string> order;
  std::map<std::string, Accumulator> groups;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << row_number << ": expected " << header.size() << " fields, found "
          << cells.size();
      throw DataError(msg.str());
    }
    const std::string env_id = trim(cells[env_idx]);
    auto [it, inserted] = groups.try_emplace(env_id);
    if (inserted) order.push_back(env_id);
    std::vector<double> values;
    values.reserve(covariate_cols.size());
    for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
      values.push_back(parse_cell(cells[covariate_cols[k]], row_number, names[k]));
    }
    it->second.rows.push_back(std::move(values));
    if (outcome_idx >= 0) {
      it->second.y.push_back(parse_cell(cells[outcome_idx], row_number, *outcome_column));
    }
  }
  if (order.empty()) throw DataError("row 2: file has a header but no data rows");

  std::vector<EnvDataset> envs;
  envs.reserve(order.size());
  for (const auto& id : order) {
    const auto& acc = groups.at(id);
    EnvDataset env;
    env.env_id = id;
    env.covariate_names = names;
    const auto n = static_cast<Eigen::Index>(acc.rows.size());
    env.covariates.resize(n, static_cast<Eigen::Index>(names.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < names.size(); ++j) {
        env.covariates(i, static_cast<Eigen::Index>(j)) = acc.rows[i][j];
      }
    }
    if (outcome_idx >= 0) {
      env.outcomes = Eigen::Map<const Eigen::VectorXd>(acc.y.data(), n);
    }
    envs.push_back(std::move(env));
  }
  return MultiEnvData(std::move(envs));
}

MultiEnvData load_multi_env_csv(const std::filesystem::path& path,
                                const std::string& env_column,
                                const std::optional<std::string>& outcome_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_multi_env_csv(in, env_column, outcome_column);
}

void write_multi_env_csv(std::ostream& out, const MultiEnvData& data,
                         const std::string& env_column, const std::string& outcome_column) {
  CsvWriter w(out);
  const bool with_y = data.all_have_outcomes();
  w.field(env_column);
  for (const auto& name : data.covariate_names()) w.field(name);
  if (with_y) w.field(outcome_column);
  w.end_row();
  for (const auto& env : data.environments()) {
    for (Eigen::Index i = 0; i < env.rows(); ++i) {
      w.field(env.env_id);
      for (Eigen::Index j = 0; j < env.cols(); ++j) w.field(env.covariates(i, j));
      if (with_y) w.field((*env.outcomes)(i));
      w.end_row();
    }
  }
}

void write_multi_env_csv(const std::filesystem::path& path, const MultiEnvData& data,
                         const std::string& env_column, const std::string& outcome_column) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_multi_env_csv(out, data, env_column, outcome_column);
}

}  // namespace eacs
