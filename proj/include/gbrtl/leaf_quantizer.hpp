/*
 * Copyright 2026 The gbrtl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbrtl/ensemble.hpp"

namespace gbrtl {

/// Nearest integer; exact halves resolve away from zero.
std::int64_t round_half_away(double z);

/// Bits needed to hold `v` as an unsigned value, never less than 1.
int bits_for(std::uint64_t v) noexcept;

struct QuantizedNode {
  static constexpr int kNoChild = -1;

  int feature = -1;
  std::int64_t threshold = 0;  // integer T; branch left iff x < T
  int left = kNoChild;
  int right = kNoChild;
  std::uint64_t value = 0;     // leaf qf

  bool is_leaf() const noexcept { return left == kNoChild; }
  friend bool operator==(const QuantizedNode&, const QuantizedNode&) = default;
};

struct QuantizedTree {
  std::vector<QuantizedNode> nodes;

  std::uint64_t max_leaf() const;
  friend bool operator==(const QuantizedTree&, const QuantizedTree&) = default;
};

/// Integer-only ensemble: QF_n(x) = bias_n + sum_m qf_{n,m}(x).
///
/// Every tree's smallest leaf is 0 and its largest fits in w_tree bits.
/// Multiclass biases are shifted to be nonnegative by `bias_shift`.
struct QuantizedEnsemble {
  TaskKind task = TaskKind::kBinaryLogistic;
  int num_classes = 2;
  int num_features = 0;
  int w_feature = 0;
  int w_tree = 0;
  std::vector<QuantizedTree> trees;  // same round-robin order as GbdtEnsemble
  std::vector<std::int64_t> biases;  // qb (binary) or qb_n (multiclass)
  std::vector<int> tree_widths;      // bits_for(max leaf) per tree
  double scale = 1.0;

  // Audit trail of the float intermediates.
  std::vector<double> min_leaves;    // per tree, subtracted from each leaf
  std::vector<double> float_biases;  // b or b_n before scaling
  double max_shifted_leaf = 0.0;
  std::int64_t bias_shift = 0;       // integer added to every multiclass bias

  int num_groups() const noexcept { return task == TaskKind::kBinaryLogistic ? 1 : num_classes; }
  int group_of(std::size_t tree_index) const noexcept {
    return static_cast<int>(tree_index % static_cast<std::size_t>(num_groups()));
  }
  std::size_t trees_per_group() const noexcept { return trees.size() / static_cast<std::size_t>(num_groups()); }
  /// Binary models whose bias is positive classify every input as 1.
  bool constant_classifier() const noexcept {
    return task == TaskKind::kBinaryLogistic && !biases.empty() && biases[0] > 0;
  }
};

/// Shift each tree to a zero minimum, scale all leaves by
/// (2^w_tree - 1) / max shifted leaf, round leaves and bias.
QuantizedEnsemble quantize_binary(const GbdtEnsemble& ensemble, int w_feature, int w_tree);

/// As quantize_binary but with one bias per class, a single global scale,
/// and biases shifted by an integer so that all are nonnegative.
QuantizedEnsemble quantize_multiclass(const GbdtEnsemble& ensemble, int w_feature, int w_tree);

/// Dispatches on ensemble.task.
QuantizedEnsemble quantize_leaves(const GbdtEnsemble& ensemble, int w_feature, int w_tree);

/// Canonical schema with integer "t"/"v" plus "w_feature", "w_tree",
/// "biases", "scale", "tree_widths".
std::string to_json(const QuantizedEnsemble& q);

}  // namespace gbrtl
