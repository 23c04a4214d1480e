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

#include "eacs/subsets.hpp"

#include <algorithm>
#include <set>

#include "eacs/error.hpp"

namespace eacs {

SubsetMask SubsetMask::from_indices(std::size_t p, const std::vector<int>& indices) {
  std::vector<bool> bits(p, false);
  for (int j : indices) {
    if (j < 0 || static_cast<std::size_t>(j) >= p) {
      throw InvalidArgument("SubsetMask: index " + std::to_string(j) + " out of range");
    }
    bits[static_cast<std::size_t>(j)] = true;
  }
  return SubsetMask(std::move(bits));
}

SubsetMask SubsetMask::from_bits(const std::string& text) {
  std::vector<bool> bits;
  for (char c : text) {
    if (c != '0' && c != '1') throw InvalidArgument("SubsetMask: bad bit string '" + text + "'");
    bits.push_back(c == '1');
  }
  return SubsetMask(std::move(bits));
}

std::size_t SubsetMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<Eigen::Index> SubsetMask::active() const {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) idx.push_back(static_cast<Eigen::Index>(j));
  }
  return idx;
}

bool SubsetMask::contains_all(const std::vector<int>& indices) const {
  return std::all_of(indices.begin(), indices.end(), [&](int j) {
    return j >= 0 && static_cast<std::size_t>(j) < bits_.size() && bits_[j];
  });
}

bool SubsetMask::is_subset_of(const SubsetMask& other) const {
  if (other.size() != size()) return false;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j] && !other.bits_[j]) return false;
  }
  return true;
}

SubsetMask SubsetMask::intersect(const SubsetMask& other) const {
  if (other.size() != size()) throw InvalidArgument("SubsetMask::intersect: size mismatch");
  std::vector<bool> bits(size());
  for (std::size_t j = 0; j < bits.size(); ++j) bits[j] = bits_[j] && other.bits_[j];
  return SubsetMask(std::move(bits));
}

std::string SubsetMask::bit_string() const {
  std::string s;
  for (bool b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

std::string SubsetMask::label(const std::vector<std::string>& names) const {
  std::string s = "{";
  bool first = true;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (!bits_[j]) continue;
    if (!first) s += ",";
    s += j < names.size() ? names[j] : std::to_string(j);
    first = false;
  }
  return s + "}";
}

bool library_order_less(const SubsetMask& a, const SubsetMask& b) {
  const auto& x = a.bits();
  const auto& y = b.bits();
  if (x.size() != y.size()) return x.size() < y.size();
  for (std::size_t j = x.size(); j-- > 0;) {
    if (x[j] != y[j]) return y[j];
  }
  return false;
}

SubsetLibrary::SubsetLibrary(std::vector<SubsetMask> masks, std::vector<int> constraint)
    : masks_(std::move(masks)), constraint_(std::move(constraint)) {
  if (masks_.empty()) throw InvalidArgument("SubsetLibrary: empty library");
  const auto p = masks_.front().size();
  std::set<std::vector<bool>> seen;
  for (const auto& mask : masks_) {
    if (mask.size() != p) throw InvalidArgument("SubsetLibrary: mask width mismatch");
    if (!mask.contains_all(constraint_)) {
      throw InvalidArgument("SubsetLibrary: mask " + mask.bit_string() +
                            " violates the causal constraint");
    }
    if (!seen.insert(mask.bits()).second) {
      throw InvalidArgument("SubsetLibrary: duplicate mask");
    }
  }
}

std::optional<std::size_t> SubsetLibrary::find(const SubsetMask& mask) const {
  for (std::size_t i = 0; i < masks_.size(); ++i) {
    if (masks_[i] == mask) return i;
  }
  return std::nullopt;
}

namespace {

void enumerate_free(const std::vector<std::size_t>& free, std::size_t start, std::size_t budget,
                    std::vector<bool>& bits, std::vector<SubsetMask>& out) {
  out.emplace_back(bits);
  if (budget == 0) return;
  for (std::size_t k = start; k < free.size(); ++k) {
    bits[free[k]] = true;
    enumerate_free(free, k + 1, budget - 1, bits, out);
    bits[free[k]] = false;
  }
}

}  // namespace

SubsetLibrary build_library(std::size_t p, const std::vector<int>& constraint,
                            std::optional<std::size_t> max_size) {
  if (p == 0) throw InvalidArgument("build_library: p must be >= 1");
  std::set<int> fixed;
  for (int j : constraint) {
    if (j < 0 || static_cast<std::size_t>(j) >= p) {
      throw InvalidArgument("build_library: constraint index " + std::to_string(j) +
                            " out of range for p = " + std::to_string(p));
    }
    fixed.insert(j);
  }
  if (!max_size && p > 16) {
    throw InvalidArgument("build_library: p = " + std::to_string(p) +
                          " exceeds the enumeration guard of 16; pass max_size");
  }
  std::vector<std::size_t> free;
  std::vector<bool> bits(p, false);
  for (std::size_t j = 0; j < p; ++j) {
    if (fixed.count(static_cast<int>(j))) {
      bits[j] = true;
    } else {
      free.push_back(j);
    }
  }
  std::vector<SubsetMask> masks;
  enumerate_free(free, 0, max_size.value_or(free.size()), bits, masks);
  std::sort(masks.begin(), masks.end(), library_order_less);
  return SubsetLibrary(std::move(masks), std::vector<int>(fixed.begin(), fixed.end()));
}

}  // namespace eacs
