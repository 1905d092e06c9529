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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gbrtl/feature_quantizer.hpp"
#include "gbrtl/leaf_quantizer.hpp"

namespace gbrtl {

// ---------------------------------------------------------------------------
// Key generator

/// One shared comparator bit: k = (features[feature] < threshold).
struct Key {
  int id = 0;
  int feature = 0;
  QValue threshold = 0;  // 1 <= threshold <= 2^w_feature - 1

  friend bool operator==(const Key&, const Key&) = default;
};

/// How a tree node's comparison is realized. Comparisons whose outcome does
/// not depend on the input are folded to constants.
struct KeyRef {
  enum class Kind { kKey, kAlwaysRight, kAlwaysLeft };
  Kind kind = Kind::kKey;
  int key = -1;

  friend bool operator==(const KeyRef&, const KeyRef&) = default;
};

struct KeySet {
  std::vector<Key> keys;                     // sorted by (feature, threshold)
  std::vector<std::vector<KeyRef>> bindings;  // [tree][node]; leaves hold kKey with key -1
  std::size_t folded_nodes = 0;
};

KeySet build_keys(const QuantizedEnsemble& q);

/// Evaluates every key on a quantized input vector.
std::vector<std::uint8_t> evaluate_keys(std::span<const Key> keys, std::span<const QValue> qx);

// ---------------------------------------------------------------------------
// Tree logic

struct Literal {
  int key = 0;
  bool positive = true;  // true: key bit must be 1 (left branch)

  friend bool operator==(const Literal&, const Literal&) = default;
};

/// Conjunction of literals along one root-to-leaf route.
using Path = std::vector<Literal>;

/// Sum-of-products select line for one quantized leaf value.
struct Selector {
  std::uint64_t value = 0;
  std::vector<Path> paths;
};

/// A decision tree as a multiplexer cascade over shared key bits.
struct TreeLogic {
  int class_index = 0;
  int tree_index = 0;  // index within its class
  std::vector<std::uint64_t> unique_values;  // ascending
  std::uint64_t default_value = 0;
  std::size_t default_paths = 0;
  std::vector<Selector> selectors;  // ascending value order, default excluded
  int out_width = 1;

  std::size_t path_count() const;
  /// Cascade semantics: first selector (ascending) that is true, else default.
  std::uint64_t evaluate(std::span<const std::uint8_t> key_bits) const;
  /// Keys referenced by any selector, ascending.
  std::vector<int> used_keys() const;
};

bool path_holds(const Path& path, std::span<const std::uint8_t> key_bits);

/// Enumerates root-to-leaf paths (constant nodes folded) and groups them by
/// leaf value. The value reached by the most paths becomes the default
/// (ties go to the smaller value).
TreeLogic tree_to_logic(const QuantizedTree& tree, std::span<const KeyRef> bindings, int class_index,
                        int tree_index);

/// "(or (and k5 (not k12)) (and (not k5) k24))"; an empty conjunction is "1".
std::string to_prefix(const Selector& selector);

// ---------------------------------------------------------------------------
// Adder trees and pipelining

struct PipelineConfig {
  int p0 = 0;  // register after the key generator
  int p1 = 0;  // register after the tree outputs
  int p2 = 0;  // registered levels inside each adder tree

  int latency() const noexcept { return p0 + p1 + p2; }

  /// Parses "a,b,c" (an optional surrounding [] is accepted).
  static PipelineConfig parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

void validate(const PipelineConfig& p);

struct AdderNode {
  int left = -1;   // index into the previous level; -1 on level 0
  int right = -1;  // -1 for a pass-through
  std::uint64_t max_value = 0;
  int width = 1;
  bool constant = false;  // derived only from the bias operand
  std::uint64_t constant_value = 0;
};

/// Balanced left-to-right pairwise reduction. levels[0] holds the operands
/// (tree outputs, then the bias if any); levels.back() holds the root.
struct AdderTree {
  std::vector<std::vector<AdderNode>> levels;
  std::vector<int> register_levels;  // registers after these levels (1-based, ascending)
  std::size_t tree_operands = 0;
  std::optional<std::uint64_t> bias;

  int depth() const noexcept { return static_cast<int>(levels.size()) - 1; }
  const AdderNode& root() const { return levels.back().front(); }
  bool registered_after(int level) const;
};

/// Register boundaries for p2 stages over `depth` adder levels:
/// floor(depth * i / (p2 + 1)) for i = 1..p2.
std::vector<int> even_register_levels(int depth, int p2);

AdderTree build_adder_tree(std::span<const std::uint64_t> operand_max, std::optional<std::uint64_t> bias, int p2);

// ---------------------------------------------------------------------------
// Netlist

struct Netlist {
  TaskKind task = TaskKind::kBinaryLogistic;
  int num_classes = 2;
  int num_features = 0;
  int w_feature = 0;
  int w_tree = 0;
  std::vector<Key> keys;
  std::vector<TreeLogic> trees;     // class-major: all trees of class 0, then class 1, ...
  std::vector<AdderTree> adders;    // one per output group
  std::int64_t threshold = 0;       // binary: y = (sum >= threshold), threshold = -qb
  bool constant_classifier = false; // binary qb > 0
  PipelineConfig pipeline;
  int sum_width = 1;                // widest adder root
  std::size_t folded_nodes = 0;

  // Provenance echoed into generated files.
  double scale = 1.0;
  std::vector<std::int64_t> biases;

  int num_groups() const noexcept { return task == TaskKind::kBinaryLogistic ? 1 : num_classes; }
  std::size_t trees_per_group() const noexcept { return trees.size() / static_cast<std::size_t>(num_groups()); }
  int latency_cycles() const noexcept { return pipeline.latency(); }
  QValue max_feature_code() const noexcept { return (QValue{1} << w_feature) - 1; }
};

Netlist build_netlist(const QuantizedEnsemble& q, const PipelineConfig& pipeline);

/// Hardware-visible result. Binary: `y` plus the unbiased adder root in
/// sums[0]. Multiclass: the N biased class sums (y unused, 0).
struct NetlistOutput {
  int y = 0;
  std::vector<std::uint64_t> sums;

  friend bool operator==(const NetlistOutput&, const NetlistOutput&) = default;
};

/// Combinational reference semantics of the IR.
NetlistOutput interpret_netlist(const Netlist& netlist, std::span<const QValue> qx);

/// Cycle-accurate model with explicit pipeline registers and no reset.
///
/// Each call to step() is one rising clock edge: the output visible during
/// the cycle is returned, then every register loads its input. A bubble
/// (std::nullopt) marks the register contents invalid, as an unknown value.
class PipelineSimulator {
 public:
  explicit PipelineSimulator(const Netlist& netlist);

  std::optional<NetlistOutput> step(std::optional<std::span<const QValue>> input);

  int latency() const noexcept { return static_cast<int>(registers_.size()); }
  /// Bits currently held across all pipeline registers.
  std::size_t register_bits() const noexcept { return register_bits_; }

 private:
  struct Stage;
  using Frame = std::vector<std::uint64_t>;

  Frame run_segment(std::size_t segment, const Frame& in) const;
  NetlistOutput finish(const Frame& in) const;

  const Netlist* netlist_;
  std::vector<int> cut_after_;  // stage index each register follows
  std::vector<std::optional<Frame>> registers_;
  std::size_t register_bits_ = 0;
};

/// Streams inputs at one per cycle and drains the pipeline. Element t of
/// the result is the output observed in cycle t; there are
/// stream.size() + latency entries.
std::vector<std::optional<NetlistOutput>> simulate_pipelined(const Netlist& netlist,
                                                             std::span<const std::vector<QValue>> stream);

struct NetlistStats {
  std::size_t key_count = 0;
  std::size_t tree_count = 0;
  std::vector<std::size_t> unique_values_per_tree;
  std::size_t path_count = 0;
  std::size_t folded_nodes = 0;
  std::vector<std::vector<int>> adder_level_widths;  // [group][level] widest node
  std::vector<int> adder_root_widths;
  std::size_t register_bits = 0;
  int latency_cycles = 0;
  bool constant_classifier = false;
};

NetlistStats stats(const Netlist& netlist);
std::string to_json(const NetlistStats& s);

/// Debug dump: keys, selector expressions, adder shapes.
std::string netlist_to_json(const Netlist& netlist);

}  // namespace gbrtl
