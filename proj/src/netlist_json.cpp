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
#include "gbrtl/netlist.hpp"
#include "json.hpp"

namespace gbrtl {

using ordered_json = nlohmann::ordered_json;

std::string to_json(const NetlistStats& s) {
  ordered_json doc;
  doc["key_count"] = s.key_count;
  doc["tree_count"] = s.tree_count;
  doc["unique_values_per_tree"] = s.unique_values_per_tree;
  doc["path_count"] = s.path_count;
  doc["folded_nodes"] = s.folded_nodes;
  doc["adder_level_widths"] = s.adder_level_widths;
  doc["adder_root_widths"] = s.adder_root_widths;
  doc["register_bits"] = s.register_bits;
  doc["latency_cycles"] = s.latency_cycles;
  doc["constant_classifier"] = s.constant_classifier;
  return doc.dump(1) + "\n";
}

std::string netlist_to_json(const Netlist& n) {
  ordered_json doc;
  doc["task"] = n.task == TaskKind::kBinaryLogistic ? "binary" : "multiclass";
  doc["num_classes"] = n.num_classes;
  doc["num_features"] = n.num_features;
  doc["w_feature"] = n.w_feature;
  doc["w_tree"] = n.w_tree;
  doc["pipeline"] = {n.pipeline.p0, n.pipeline.p1, n.pipeline.p2};
  doc["latency_cycles"] = n.latency_cycles();
  if (n.task == TaskKind::kBinaryLogistic) {
    doc["threshold"] = n.threshold;
    doc["constant_classifier"] = n.constant_classifier;
  }
  doc["sum_width"] = n.sum_width;

  ordered_json keys = ordered_json::array();
  for (const auto& k : n.keys) keys.push_back({{"id", k.id}, {"feature", k.feature}, {"threshold", k.threshold}});
  doc["keys"] = std::move(keys);

  ordered_json trees = ordered_json::array();
  for (const auto& t : n.trees) {
    ordered_json sel = ordered_json::array();
    for (const auto& s : t.selectors) sel.push_back({{"value", s.value}, {"expr", to_prefix(s)}});
    trees.push_back({{"class", t.class_index},
                     {"index", t.tree_index},
                     {"out_width", t.out_width},
                     {"unique_values", t.unique_values},
                     {"default", t.default_value},
                     {"selectors", std::move(sel)}});
  }
  doc["trees"] = std::move(trees);

  ordered_json adders = ordered_json::array();
  for (const auto& at : n.adders) {
    ordered_json levels = ordered_json::array();
    for (const auto& level : at.levels) {
      ordered_json nodes = ordered_json::array();
      for (const auto& node : level) {
        ordered_json j{{"width", node.width}, {"max", node.max_value}};
        if (node.left >= 0) j["in"] = node.right >= 0 ? ordered_json{node.left, node.right} : ordered_json{node.left};
        if (node.constant) j["constant"] = node.constant_value;
        nodes.push_back(std::move(j));
      }
      levels.push_back(std::move(nodes));
    }
    ordered_json a{{"levels", std::move(levels)}, {"register_levels", at.register_levels}};
    if (at.bias) a["bias"] = *at.bias;
    adders.push_back(std::move(a));
  }
  doc["adders"] = std::move(adders);
  return doc.dump(1) + "\n";
}

}  // namespace gbrtl
