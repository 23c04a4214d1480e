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

#include "eacs/rng.hpp"

#include <array>

namespace eacs {

Engine make_engine(const StreamKey& key) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffULL); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  const auto role = static_cast<std::uint64_t>(key.role);
  // A fixed tag word separates these seeds from ad-hoc seed_seq uses.
  std::array<std::uint32_t, 9> words{0x45414353U,          lo(key.seed),
                                     hi(key.seed),         lo(key.replication),
                                     hi(key.replication),  lo(role),
                                     lo(key.index),        hi(key.index),
                                     hi(role)};
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace eacs
