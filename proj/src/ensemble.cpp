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
#include "gbrtl/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "gbrtl/error.hpp"
#include "gbrtl/io.hpp"
#include "json.hpp"

namespace gbrtl {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
    if (n.is_leaf()) {
      best = std::max(best, d);
    } else {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

double DecisionTree::min_leaf() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& n : nodes)
    if (n.is_leaf()) m = std::min(m, n.leaf_value);
  return m;
}

double DecisionTree::max_leaf() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& n : nodes)
    if (n.is_leaf()) m = std::max(m, n.leaf_value);
  return m;
}

namespace {

void validate_tree(const DecisionTree& tree, std::size_t tree_index, int num_features) {
  auto where = [&](std::size_t node) {
    return "tree " + std::to_string(tree_index) + ", node " + std::to_string(node);
  };
  if (tree.nodes.empty()) fail(ErrorKind::kValidation, "tree " + std::to_string(tree_index) + " has no nodes");

  const std::size_t n = tree.nodes.size();
  std::vector<int> parents(n, 0);
  std::vector<std::size_t> stack{0};
  std::size_t reached = 0;
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    ++reached;
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) {
      if (node.right != TreeNode::kNoChild) fail(ErrorKind::kValidation, where(i) + ": leaf with a right child");
      if (!std::isfinite(node.leaf_value)) fail(ErrorKind::kValidation, where(i) + ": non-finite leaf value");
      continue;
    }
    if (node.feature < 0 || node.feature >= num_features) {
      fail(ErrorKind::kValidation, where(i) + ": feature index " + std::to_string(node.feature) +
                                       " outside [0, " + std::to_string(num_features) + ")");
    }
    if (std::isnan(node.threshold)) fail(ErrorKind::kValidation, where(i) + ": NaN threshold");
    for (int child : {node.left, node.right}) {
      if (child <= 0 || static_cast<std::size_t>(child) >= n) {
        fail(ErrorKind::kValidation, where(i) + ": child index " + std::to_string(child) + " out of range");
      }
      if (++parents[static_cast<std::size_t>(child)] > 1) {
        fail(ErrorKind::kValidation, where(i) + ": node " + std::to_string(child) + " has two parents");
      }
      stack.push_back(static_cast<std::size_t>(child));
    }
  }
  if (reached != n) {
    fail(ErrorKind::kValidation, "tree " + std::to_string(tree_index) + ": " + std::to_string(n - reached) +
                                     " node(s) unreachable from the root");
  }
}

}  // namespace

void validate(const GbdtEnsemble& e) {
  if (e.num_features < 0) fail(ErrorKind::kValidation, "negative feature count");
  if (e.task == TaskKind::kBinaryLogistic) {
    if (e.num_classes != 2) fail(ErrorKind::kValidation, "binary model must have num_classes = 2");
  } else if (e.num_classes < 2) {
    fail(ErrorKind::kValidation, "multiclass model needs at least 2 classes");
  }
  if (e.base_margin.size() != static_cast<std::size_t>(e.num_groups())) {
    fail(ErrorKind::kValidation, "expected " + std::to_string(e.num_groups()) + " base margin value(s), got " +
                                     std::to_string(e.base_margin.size()));
  }
  for (double b : e.base_margin)
    if (!std::isfinite(b)) fail(ErrorKind::kValidation, "non-finite base margin");
  if (e.trees.size() % static_cast<std::size_t>(e.num_groups()) != 0) {
    fail(ErrorKind::kValidation, "tree count " + std::to_string(e.trees.size()) + " is not divisible by " +
                                     std::to_string(e.num_groups()) + " classes");
  }
  for (std::size_t i = 0; i < e.trees.size(); ++i) validate_tree(e.trees[i], i, e.num_features);
}

// ---------------------------------------------------------------------------
// XGBoost save_model JSON

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) {
    fail(ErrorKind::kParse, context + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

// learner_model_param values are stored as strings ("3", "[5.6E-1]", "5E-1").
std::vector<double> parse_number_list(const json& v, const std::string& what) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
    return out;
  }
  if (!v.is_string()) fail(ErrorKind::kParse, what + " must be a string or number");
  std::string s = v.get<std::string>();
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }), s.end());
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::kParse, what + ": cannot parse '" + item + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int parse_int_param(const json& v, const std::string& what) {
  auto vals = parse_number_list(v, what);
  if (vals.size() != 1 || vals[0] != std::floor(vals[0])) fail(ErrorKind::kParse, what + " must be an integer");
  return static_cast<int>(vals[0]);
}

template <typename T>
std::vector<T> array_of(const json& tree, const char* key, const std::string& context) {
  const json& a = require(tree, key, context);
  if (!a.is_array()) fail(ErrorKind::kParse, context + ": '" + key + "' is not an array");
  return a.get<std::vector<T>>();
}

DecisionTree convert_xgb_tree(const json& t, std::size_t index, int num_features) {
  const std::string ctx = "tree " + std::to_string(index);
  auto left = array_of<int>(t, "left_children", ctx);
  auto right = array_of<int>(t, "right_children", ctx);
  auto split_index = array_of<int>(t, "split_indices", ctx);
  auto split_cond = array_of<double>(t, "split_conditions", ctx);
  std::vector<double> base_weights;
  if (t.contains("base_weights")) base_weights = t.at("base_weights").get<std::vector<double>>();
  if (t.contains("default_left")) (void)t.at("default_left");  // missing values never reach inference

  const std::size_t n = left.size();
  if (right.size() != n || split_index.size() != n || split_cond.size() != n) {
    fail(ErrorKind::kValidation, ctx + ": per-node arrays have different lengths");
  }
  if (t.contains("split_type")) {
    for (int st : t.at("split_type").get<std::vector<int>>())
      if (st != 0) fail(ErrorKind::kUnsupported, ctx + ": categorical splits are not supported");
  }
  if (t.contains("tree_param") && t.at("tree_param").contains("size_leaf_vector")) {
    int slv = parse_int_param(t.at("tree_param").at("size_leaf_vector"), ctx + " size_leaf_vector");
    if (slv > 1) fail(ErrorKind::kUnsupported, ctx + ": vector-leaf trees are not supported");
  }

  DecisionTree tree;
  tree.nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (left[i] == -1) {
      if (right[i] != -1) fail(ErrorKind::kValidation, ctx + ": node " + std::to_string(i) + " has one child");
      // Leaf scores live in split_conditions at leaf positions; base_weights
      // carries the same value in the schema versions we have seen.
      tree.nodes.push_back(TreeNode::leaf(split_cond[i]));
    } else {
      if (split_index[i] >= num_features) {
        fail(ErrorKind::kValidation, ctx + ": split feature " + std::to_string(split_index[i]) +
                                         " >= num_feature " + std::to_string(num_features));
      }
      tree.nodes.push_back(TreeNode::split(split_index[i], split_cond[i], left[i], right[i]));
    }
  }
  return tree;
}

}  // namespace

LoadedModel load_xgboost_model(std::string_view json_text) {
  json doc = parse_json(json_text);
  const json& learner = require(doc, "learner", "model");
  const json& booster = require(learner, "gradient_booster", "learner");
  LoadedModel out;
  LoadReport& report = out.report;

  report.booster = require(booster, "name", "gradient_booster").get<std::string>();
  if (report.booster != "gbtree") fail(ErrorKind::kUnsupported, "unsupported booster '" + report.booster + "'");

  report.objective = require(require(learner, "objective", "learner"), "name", "objective").get<std::string>();
  GbdtEnsemble& e = out.ensemble;
  if (report.objective == "binary:logistic") {
    e.task = TaskKind::kBinaryLogistic;
  } else if (report.objective == "multi:softmax" || report.objective == "multi:softprob") {
    e.task = TaskKind::kMulticlassSoftmax;
  } else {
    fail(ErrorKind::kUnsupported, "unsupported objective '" + report.objective + "'");
  }

  const json& params = require(learner, "learner_model_param", "learner");
  e.num_features = parse_int_param(require(params, "num_feature", "learner_model_param"), "num_feature");
  int num_class = params.contains("num_class") ? parse_int_param(params.at("num_class"), "num_class") : 0;
  if (e.task == TaskKind::kMulticlassSoftmax) {
    if (num_class < 2) fail(ErrorKind::kValidation, "multiclass objective with num_class " + std::to_string(num_class));
    e.num_classes = num_class;
  } else {
    if (num_class > 1) fail(ErrorKind::kValidation, "binary objective with num_class " + std::to_string(num_class));
    e.num_classes = 2;
  }

  const json& base_score = require(params, "base_score", "learner_model_param");
  report.base_score_text = base_score.is_string() ? base_score.get<std::string>() : base_score.dump();
  std::vector<double> bs = parse_number_list(base_score, "base_score");
  if (e.task == TaskKind::kBinaryLogistic) {
    if (bs.size() != 1) fail(ErrorKind::kValidation, "binary model with " + std::to_string(bs.size()) + " base scores");
    double p = bs[0];
    if (!(p > 0.0 && p < 1.0)) {
      fail(ErrorKind::kValidation, "binary:logistic base_score " + std::to_string(p) + " is not a probability in (0,1)");
    }
    e.base_margin = {std::log(p / (1.0 - p))};
    report.base_score_rule = "logit of probability-space base_score";
  } else {
    if (bs.size() == 1) {
      e.base_margin.assign(static_cast<std::size_t>(e.num_classes), bs[0]);
      report.base_score_rule = "scalar base_score used as the margin of every class";
    } else if (bs.size() == static_cast<std::size_t>(e.num_classes)) {
      e.base_margin = bs;
      report.base_score_rule = "per-class base_score used as margins";
    } else {
      fail(ErrorKind::kValidation, "expected 1 or " + std::to_string(e.num_classes) + " base scores, got " +
                                       std::to_string(bs.size()));
    }
  }
  report.base_margin = e.base_margin;

  const json& model = require(booster, "model", "gradient_booster");
  const json& trees = require(model, "trees", "model");
  if (!trees.is_array()) fail(ErrorKind::kParse, "model.trees is not an array");

  std::vector<DecisionTree> converted;
  converted.reserve(trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) converted.push_back(convert_xgb_tree(trees[i], i, e.num_features));

  const int groups = e.num_groups();
  std::vector<int> tree_info;
  if (model.contains("tree_info")) {
    tree_info = model.at("tree_info").get<std::vector<int>>();
    if (tree_info.size() != converted.size()) fail(ErrorKind::kValidation, "tree_info length differs from tree count");
  } else {
    for (std::size_t i = 0; i < converted.size(); ++i) tree_info.push_back(static_cast<int>(i % groups));
  }

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(groups));
  bool round_robin = true;
  for (std::size_t i = 0; i < tree_info.size(); ++i) {
    int c = tree_info[i];
    if (c < 0 || c >= groups) fail(ErrorKind::kValidation, "tree " + std::to_string(i) + " has class " + std::to_string(c));
    if (c != static_cast<int>(i % static_cast<std::size_t>(groups))) round_robin = false;
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }
  for (const auto& cls : by_class) {
    if (cls.size() != by_class[0].size()) fail(ErrorKind::kValidation, "classes have different tree counts");
  }
  const std::size_t per_class = by_class[0].size();
  e.trees.reserve(converted.size());
  for (std::size_t m = 0; m < per_class; ++m)
    for (int c = 0; c < groups; ++c) e.trees.push_back(std::move(converted[by_class[static_cast<std::size_t>(c)][m]]));
  report.class_mapping = round_robin ? "round-robin (tree i -> class i mod N)"
                                     : "reordered to round-robin from tree_info";

  validate(e);
  return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON

GbdtEnsemble parse_canonical_json(std::string_view json_text) {
  json doc = parse_json(json_text);
  GbdtEnsemble e;
  try {
    const std::string task = require(doc, "task", "model").get<std::string>();
    if (task == "binary") {
      e.task = TaskKind::kBinaryLogistic;
    } else if (task == "multiclass") {
      e.task = TaskKind::kMulticlassSoftmax;
    } else {
      fail(ErrorKind::kUnsupported, "unsupported task '" + task + "'");
    }
    e.num_classes = doc.contains("num_classes") ? doc.at("num_classes").get<int>() : 2;
    e.num_features = require(doc, "num_features", "model").get<int>();
    const json& f0 = require(doc, "f0", "model");
    if (f0.is_array()) {
      e.base_margin = f0.get<std::vector<double>>();
    } else {
      e.base_margin.assign(static_cast<std::size_t>(std::max(1, e.num_groups())), f0.get<double>());
    }
    const json& trees = require(doc, "trees", "model");
    for (std::size_t ti = 0; ti < trees.size(); ++ti) {
      const json& nodes = require(trees[ti], "nodes", "tree " + std::to_string(ti));
      DecisionTree tree;
      for (const json& n : nodes) {
        if (n.contains("v")) {
          tree.nodes.push_back(TreeNode::leaf(n.at("v").get<double>()));
          if ((n.contains("l") && n.at("l").get<int>() != -1) || (n.contains("r") && n.at("r").get<int>() != -1)) {
            fail(ErrorKind::kValidation, "tree " + std::to_string(ti) + ": leaf node with children");
          }
        } else {
          const std::string ctx = "tree " + std::to_string(ti) + " node";
          tree.nodes.push_back(TreeNode::split(require(n, "f", ctx).get<int>(), require(n, "t", ctx).get<double>(),
                                               require(n, "l", ctx).get<int>(), require(n, "r", ctx).get<int>()));
        }
      }
      e.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& ex) {
    fail(ErrorKind::kParse, std::string("canonical model: ") + ex.what());
  }
  validate(e);
  return e;
}

std::string to_canonical_json(const GbdtEnsemble& e) {
  ordered_json doc;
  doc["task"] = e.task == TaskKind::kBinaryLogistic ? "binary" : "multiclass";
  doc["num_classes"] = e.num_classes;
  doc["num_features"] = e.num_features;
  bool uniform = std::all_of(e.base_margin.begin(), e.base_margin.end(),
                             [&](double b) { return b == e.base_margin.front(); });
  if (uniform && !e.base_margin.empty()) {
    doc["f0"] = e.base_margin.front();
  } else {
    doc["f0"] = e.base_margin;
  }
  ordered_json trees = ordered_json::array();
  for (const auto& t : e.trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes) {
      ordered_json node;
      if (n.is_leaf()) {
        node["v"] = n.leaf_value;
      } else {
        node["f"] = n.feature;
        node["t"] = n.threshold;
        node["l"] = n.left;
        node["r"] = n.right;
      }
      nodes.push_back(std::move(node));
    }
    trees.push_back(ordered_json{{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump(1) + "\n";
}

GbdtEnsemble load_model_auto(std::string_view json_text) {
  json probe = parse_json(json_text);
  if (probe.is_object() && probe.contains("learner")) return load_xgboost_model(json_text).ensemble;
  return parse_canonical_json(json_text);
}

GbdtEnsemble load_model_file(const std::string& path) {
  std::string text = read_text_file(path);
  try {
    return load_model_auto(text);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Float inference

double evaluate_tree(const DecisionTree& tree, std::span<const double> x) {
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf()) {
    const TreeNode& n = tree.nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return tree.nodes[i].leaf_value;
}

std::vector<double> predict_margin(const GbdtEnsemble& e, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(e.num_features)) {
    fail(ErrorKind::kContract, "expected " + std::to_string(e.num_features) + " features, got " + std::to_string(x.size()));
  }
  std::vector<double> margin = e.base_margin;
  for (std::size_t i = 0; i < e.trees.size(); ++i)
    margin[static_cast<std::size_t>(e.group_of(i))] += evaluate_tree(e.trees[i], x);
  return margin;
}

int decide_class(std::span<const double> margins, TaskKind task) {
  if (task == TaskKind::kBinaryLogistic) return margins[0] >= 0.0 ? 1 : 0;
  return static_cast<int>(std::max_element(margins.begin(), margins.end()) - margins.begin());
}

int predict_class_float(const GbdtEnsemble& e, std::span<const double> x) {
  return decide_class(predict_margin(e, x), e.task);
}

}  // namespace gbrtl
