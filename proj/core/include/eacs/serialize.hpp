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
#include <string>

#include "eacs/gating.hpp"
#include "eacs/linear_model.hpp"
#include "eacs/selector.hpp"

namespace eacs {

/// Versioned JSON documents: {"format": "eacs", "version": 1, "kind": ..., ...}.
inline constexpr int kModelFormatVersion = 1;

std::string to_json(const LinearPredictor& predictor);
std::string to_json(const SelectorModel& model);
std::string to_json(const GateModel& model);

LinearPredictor linear_predictor_from_json(const std::string& text);
SelectorModel selector_from_json(const std::string& text);
GateModel gate_from_json(const std::string& text);

/// Kind tag of a serialized document ("linear_predictor", "selector", "gate").
std::string model_kind(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace eacs
