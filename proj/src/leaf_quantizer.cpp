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
#include "gbrtl/leaf_quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "gbrtl/error.hpp"
#include "gbrtl/feature_quantizer.hpp"
#include "json.hpp"

namespace gbrtl {

namespace {

constexpr int kMaxTreeBits = 32;
// Thresholds far outside any feature code range behave identically once
// clamped here; this keeps the integer conversion defined.
constexpr double kThresholdLimit = 4503599627370496.0;  // 2^52

std::int64_t integer_threshold(double t) {
  double c = std::ceil(t);
  c = std::clamp(c, -kThresholdLimit, kThresholdLimit);
  return static_cast<std::int64_t>(c);
}

void check_widths(int w_feature, int w_tree) {
  if (w_tree < 1 || w_tree > kMaxTreeBits) {
    fail(ErrorKind::kConfig, "w_tree must be in [1, " + std::to_string(kMaxTreeBits) + "], got " +
                                 std::to_string(w_tree));
  }
  if (w_feature < 1 || w_feature > FeatureQuantizer::kMaxBits) {
    fail(ErrorKind::kConfig, "w_feature must be in [1, " + std::to_string(FeatureQuantizer::kMaxBits) + "], got " +
                                 std::to_string(w_feature));
  }
}

// Shared by both tasks: shift, scale, round. Biases are left unshifted.
QuantizedEnsemble quantize_common(const GbdtEnsemble& e, int w_feature, int w_tree) {
  check_widths(w_feature, w_tree);
  validate(e);

  QuantizedEnsemble q;
  q.task = e.task;
  q.num_classes = e.num_classes;
  q.num_features = e.num_features;
  q.w_feature = w_feature;
  q.w_tree = w_tree;

  const auto groups = static_cast<std::size_t>(e.num_groups());
  q.float_biases = e.base_margin;
  q.min_leaves.reserve(e.trees.size());
  double max_shifted = 0.0;
  for (std::size_t i = 0; i < e.trees.size(); ++i) {
    const double lo = e.trees[i].min_leaf();
    q.min_leaves.push_back(lo);
    q.float_biases[i % groups] += lo;
    max_shifted = std::max(max_shifted, e.trees[i].max_leaf() - lo);
  }
  q.max_shifted_leaf = max_shifted;
  const double top = std::ldexp(1.0, w_tree) - 1.0;
  q.scale = max_shifted > 0.0 ? top / max_shifted : 1.0;

  q.trees.reserve(e.trees.size());
  for (std::size_t i = 0; i < e.trees.size(); ++i) {
    QuantizedTree qt;
    qt.nodes.reserve(e.trees[i].nodes.size());
    for (const TreeNode& n : e.trees[i].nodes) {
      QuantizedNode qn;
      if (n.is_leaf()) {
        const double shifted = (n.leaf_value - q.min_leaves[i]) * q.scale;
        qn.value = static_cast<std::uint64_t>(std::clamp<std::int64_t>(round_half_away(shifted), 0,
                                                                       static_cast<std::int64_t>(top)));
      } else {
        qn.feature = n.feature;
        qn.threshold = integer_threshold(n.threshold);
        qn.left = n.left;
        qn.right = n.right;
      }
      qt.nodes.push_back(qn);
    }
    q.tree_widths.push_back(bits_for(qt.max_leaf()));
    q.trees.push_back(std::move(qt));
  }

  q.biases.reserve(groups);
  for (double b : q.float_biases) q.biases.push_back(round_half_away(b * q.scale));
  return q;
}

}  // namespace

std::int64_t round_half_away(double z) { return static_cast<std::int64_t>(std::round(z)); }

int bits_for(std::uint64_t v) noexcept { return v == 0 ? 1 : static_cast<int>(std::bit_width(v)); }

std::uint64_t QuantizedTree::max_leaf() const {
  std::uint64_t m = 0;
  for (const auto& n : nodes)
    if (n.is_leaf()) m = std::max(m, n.value);
  return m;
}

QuantizedEnsemble quantize_binary(const GbdtEnsemble& ensemble, int w_feature, int w_tree) {
  if (ensemble.task != TaskKind::kBinaryLogistic) fail(ErrorKind::kConfig, "quantize_binary needs a binary model");
  return quantize_common(ensemble, w_feature, w_tree);
}

QuantizedEnsemble quantize_multiclass(const GbdtEnsemble& ensemble, int w_feature, int w_tree) {
  if (ensemble.task != TaskKind::kMulticlassSoftmax) {
    fail(ErrorKind::kConfig, "quantize_multiclass needs a multiclass model");
  }
  QuantizedEnsemble q = quantize_common(ensemble, w_feature, w_tree);
  const std::int64_t lowest = *std::min_element(q.biases.begin(), q.biases.end());
  q.bias_shift = std::max<std::int64_t>(0, -lowest);
  for (auto& b : q.biases) b += q.bias_shift;
  return q;
}

QuantizedEnsemble quantize_leaves(const GbdtEnsemble& ensemble, int w_feature, int w_tree) {
  return ensemble.task == TaskKind::kBinaryLogistic ? quantize_binary(ensemble, w_feature, w_tree)
                                                    : quantize_multiclass(ensemble, w_feature, w_tree);
}

std::string to_json(const QuantizedEnsemble& q) {
  nlohmann::ordered_json doc;
  doc["task"] = q.task == TaskKind::kBinaryLogistic ? "binary" : "multiclass";
  doc["num_classes"] = q.num_classes;
  doc["num_features"] = q.num_features;
  doc["w_feature"] = q.w_feature;
  doc["w_tree"] = q.w_tree;
  doc["scale"] = q.scale;
  doc["biases"] = q.biases;
  doc["bias_shift"] = q.bias_shift;
  doc["tree_widths"] = q.tree_widths;
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const auto& t : q.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      nlohmann::ordered_json node;
      if (n.is_leaf()) {
        node["v"] = n.value;
      } else {
        node["f"] = n.feature;
        node["t"] = n.threshold;
        node["l"] = n.left;
        node["r"] = n.right;
      }
      nodes.push_back(std::move(node));
    }
    trees.push_back(nlohmann::ordered_json{{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump(1) + "\n";
}

}  // namespace gbrtl
