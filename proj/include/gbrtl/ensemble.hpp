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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gbrtl {

enum class TaskKind { kBinaryLogistic, kMulticlassSoftmax };

/// One node of a decision tree in flat-array form.
///
/// Internal nodes carry (feature, threshold, left, right); leaves carry
/// leaf_value and have both children set to kNoChild. The branch rule is
/// "go left iff x[feature] < threshold".
struct TreeNode {
  static constexpr int kNoChild = -1;

  int feature = -1;
  double threshold = 0.0;
  int left = kNoChild;
  int right = kNoChild;
  double leaf_value = 0.0;

  bool is_leaf() const noexcept { return left == kNoChild; }

  static TreeNode leaf(double value) noexcept {
    TreeNode n;
    n.leaf_value = value;
    return n;
  }
  static TreeNode split(int feature, double threshold, int left, int right) noexcept {
    TreeNode n;
    n.feature = feature;
    n.threshold = threshold;
    n.left = left;
    n.right = right;
    return n;
  }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Node array rooted at index 0.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  /// Number of internal nodes on the longest root-to-leaf path.
  int depth() const;
  double min_leaf() const;
  double max_leaf() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

/// A trained GBDT classifier in canonical form.
///
/// Binary models hold M trees in `trees`. Multiclass models with N classes
/// hold N*M trees in round-robin order: flat index i belongs to class i % N
/// and is tree i / N of that class.
///
/// `base_margin` holds the initial score f0 in margin space, one entry per
/// output group (1 for binary, N for multiclass).
struct GbdtEnsemble {
  TaskKind task = TaskKind::kBinaryLogistic;
  int num_classes = 2;
  int num_features = 0;
  std::vector<double> base_margin{0.0};
  std::vector<DecisionTree> trees;

  /// Number of margin outputs: 1 for binary, num_classes for multiclass.
  int num_groups() const noexcept {
    return task == TaskKind::kBinaryLogistic ? 1 : num_classes;
  }
  int group_of(std::size_t tree_index) const noexcept {
    return static_cast<int>(tree_index % static_cast<std::size_t>(num_groups()));
  }
  /// Trees per output group (M).
  std::size_t trees_per_group() const noexcept {
    return trees.size() / static_cast<std::size_t>(num_groups());
  }

  friend bool operator==(const GbdtEnsemble&, const GbdtEnsemble&) = default;
};

/// Throws Error(kValidation) unless the ensemble satisfies all structural
/// invariants (proper binary trees, feature indices in range, tree count
/// divisible by the class count, base_margin sized to num_groups()).
void validate(const GbdtEnsemble& ensemble);

/// Audit record produced by the XGBoost loader.
struct LoadReport {
  std::string objective;
  std::string booster;
  std::string base_score_text;  // raw learner_model_param.base_score
  std::string base_score_rule;  // how base_score became base_margin
  std::string class_mapping;    // how trees were assigned to classes
  std::vector<double> base_margin;
};

struct LoadedModel {
  GbdtEnsemble ensemble;
  LoadReport report;
};

/// Parses an XGBoost `save_model` JSON document (gbtree booster; objective
/// binary:logistic, multi:softmax or multi:softprob).
LoadedModel load_xgboost_model(std::string_view json_text);

/// Canonical ensemble JSON:
///   { "task": "binary"|"multiclass", "num_classes", "num_features", "f0",
///     "trees": [ { "nodes": [ {"f","t","l","r"} | {"v"} ] } ] }
/// "f0" is a number, or an array with one margin per class.
GbdtEnsemble parse_canonical_json(std::string_view json_text);
std::string to_canonical_json(const GbdtEnsemble& ensemble);

/// Accepts either format, distinguished by the top-level "learner" key.
GbdtEnsemble load_model_auto(std::string_view json_text);
GbdtEnsemble load_model_file(const std::string& path);

double evaluate_tree(const DecisionTree& tree, std::span<const double> x);

/// f0 + sum of tree scores, per output group.
std::vector<double> predict_margin(const GbdtEnsemble& ensemble, std::span<const double> x);

/// Binary: 1 iff margin >= 0. Multiclass: argmax, ties to the lowest class.
int decide_class(std::span<const double> margins, TaskKind task);

int predict_class_float(const GbdtEnsemble& ensemble, std::span<const double> x);

}  // namespace gbrtl
