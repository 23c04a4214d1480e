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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eacs {

/// Covariate-inclusion vector. May be all-false (intercept-only model).
class SubsetMask {
 public:
  SubsetMask() = default;
  explicit SubsetMask(std::vector<bool> bits) : bits_(std::move(bits)) {}
  static SubsetMask none(std::size_t p) { return SubsetMask(std::vector<bool>(p, false)); }
  static SubsetMask all(std::size_t p) { return SubsetMask(std::vector<bool>(p, true)); }
  static SubsetMask from_indices(std::size_t p, const std::vector<int>& indices);
  /// Parses a bit string such as "01" (position j is covariate j).
  static SubsetMask from_bits(const std::string& bits);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t j) const { return bits_.at(j); }
  std::size_t count() const;
  std::vector<Eigen::Index> active() const;
  bool contains_all(const std::vector<int>& indices) const;
  bool is_subset_of(const SubsetMask& other) const;
  SubsetMask intersect(const SubsetMask& other) const;
  const std::vector<bool>& bits() const { return bits_; }

  std::string bit_string() const;
  /// "{C2,X}" style label; "{}" for the empty mask.
  std::string label(const std::vector<std::string>& names) const;

  friend bool operator==(const SubsetMask&, const SubsetMask&) = default;

 private:
  std::vector<bool> bits_;
};

/// Library order: masks compare as binary numbers in which covariate j
/// carries weight 2^j.
bool library_order_less(const SubsetMask& a, const SubsetMask& b);

/// Ordered family of distinct candidate masks, optionally constrained so that
/// every mask contains the index set S.
class SubsetLibrary {
 public:
  SubsetLibrary() = default;
  SubsetLibrary(std::vector<SubsetMask> masks, std::vector<int> constraint = {});

  const std::vector<SubsetMask>& masks() const { return masks_; }
  const std::vector<int>& constraint() const { return constraint_; }
  std::size_t size() const { return masks_.size(); }
  std::size_t num_covariates() const { return masks_.empty() ? 0 : masks_.front().size(); }
  const SubsetMask& operator[](std::size_t i) const { return masks_[i]; }
  std::optional<std::size_t> find(const SubsetMask& mask) const;

 private:
  std::vector<SubsetMask> masks_;
  std::vector<int> constraint_;
};

/// Every mask that contains `constraint` and, when max_size is set, has at
/// most max_size covariates outside it. Without max_size p must be <= 16.
SubsetLibrary build_library(std::size_t p, const std::vector<int>& constraint = {},
                            std::optional<std::size_t> max_size = std::nullopt);

}  // namespace eacs
