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

#include <cstdint>
#include <random>

namespace eacs {

using Engine = std::mt19937_64;

/// Role tags keep training, test and auxiliary draws in disjoint substreams.
enum class StreamRole : std::uint64_t {
  kTrain = 1,
  kTest = 2,
  kModel = 3,
  kAuxiliary = 4,
};

/// Identifies one substream. Two keys that differ in any field yield
/// engines with unrelated state, so each (replication, environment) pair can
/// be generated independently and in any order.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  StreamRole role = StreamRole::kAuxiliary;
  std::uint64_t index = 0;
};

Engine make_engine(const StreamKey& key);

inline Engine make_engine(std::uint64_t seed) {
  return make_engine(StreamKey{seed, 0, StreamRole::kAuxiliary, 0});
}

}  // namespace eacs
