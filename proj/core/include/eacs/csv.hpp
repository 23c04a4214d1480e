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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eacs/env_data.hpp"

namespace eacs {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Streams comma-separated rows. Fields containing a delimiter, quote or
/// newline are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(std::size_t value) { return field(static_cast<long long>(value)); }
  void end_row();
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
  bool first_ = true;
};

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

/// Groups rows by `env_column` (first-appearance order); every other column
/// except `outcome_column` becomes a covariate. Errors carry row/column
/// coordinates (rows are 1-based and count the header as row 1).
MultiEnvData load_multi_env_csv(const std::filesystem::path& path,
                                const std::string& env_column,
                                const std::optional<std::string>& outcome_column);
MultiEnvData parse_multi_env_csv(std::istream& in, const std::string& env_column,
                                 const std::optional<std::string>& outcome_column);

/// Writes env_column, covariates..., and outcome_column when every
/// environment carries outcomes.
void write_multi_env_csv(const std::filesystem::path& path, const MultiEnvData& data,
                         const std::string& env_column = "env_id",
                         const std::string& outcome_column = "y");
void write_multi_env_csv(std::ostream& out, const MultiEnvData& data,
                         const std::string& env_column = "env_id",
                         const std::string& outcome_column = "y");

}  // namespace eacs
