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
#include <gtest/gtest.h>

#include <set>

#include "gbrtl/evaluator.hpp"
#include "gbrtl/feature_quantizer.hpp"
#include "gbrtl/leaf_quantizer.hpp"
#include "gbrtl/netlist.hpp"
#include "random_model.hpp"
#include "test_util.hpp"

namespace gbrtl {
namespace {

using testing::fixture_path;

QuantizedEnsemble worked_example_quantized() {
  return quantize_binary(integerize_thresholds(load_model_file(fixture_path("example_model.json"))), 4, 3);
}

QuantizedEnsemble random_quantized(std::mt19937_64& rng, int min_adder_depth = 0) {
  const auto spec = testing::random_spec(rng, min_adder_depth);
  const int w_tree = std::uniform_int_distribution<int>(1, 6)(rng);
  return quantize_leaves(integerize_thresholds(testing::random_ensemble(spec, rng)), spec.w_feature, w_tree);
}

// ---------------------------------------------------------------------------
// Keys

TEST(Keys, SharedComparisonsAreDeduplicated) {
  const KeySet ks = build_keys(worked_example_quantized());
  // x0<1, x0<3, x1<8, x2<3 (used by both trees), x3<2
  ASSERT_EQ(ks.keys.size(), 5u);
  const std::vector<std::pair<int, QValue>> want = {{0, 1}, {0, 3}, {1, 8}, {2, 3}, {3, 2}};
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(ks.keys[i].id, static_cast<int>(i));
    EXPECT_EQ(ks.keys[i].feature, want[i].first);
    EXPECT_EQ(ks.keys[i].threshold, want[i].second);
  }
  EXPECT_EQ(ks.bindings[0][2].key, 3);
  EXPECT_EQ(ks.bindings[1][2].key, 3);
  EXPECT_EQ(ks.folded_nodes, 0u);
}

TEST(Keys, CountMatchesSetOfInRangePairs) {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 50; ++i) {
    const QuantizedEnsemble q = random_quantized(rng);
    const std::int64_t top = (std::int64_t{1} << q.w_feature) - 1;
    std::set<std::pair<int, std::int64_t>> pairs;
    std::size_t constant = 0;
    for (const auto& t : q.trees)
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) continue;
        if (n.threshold <= 0 || n.threshold > top) {
          ++constant;
        } else {
          pairs.insert({n.feature, n.threshold});
        }
      }
    const KeySet ks = build_keys(q);
    EXPECT_EQ(ks.keys.size(), pairs.size());
    EXPECT_EQ(ks.folded_nodes, constant);
  }
}

TEST(Keys, OutOfRangeThresholdsFold) {
  QuantizedEnsemble q = worked_example_quantized();
  q.trees[0].nodes[0].threshold = 0;   // x < 0 never holds
  q.trees[1].nodes[0].threshold = 16;  // x < 16 always holds for 4-bit codes
  const KeySet ks = build_keys(q);
  EXPECT_EQ(ks.bindings[0][0].kind, KeyRef::Kind::kAlwaysRight);
  EXPECT_EQ(ks.bindings[1][0].kind, KeyRef::Kind::kAlwaysLeft);
  EXPECT_EQ(ks.folded_nodes, 2u);
}

// ---------------------------------------------------------------------------
// Tree logic

// Root k5; left: k12 (left: k7 -> 3 / 0, right: 1); right: k24 -> 1 / 0.
struct SelectorTree {
  QuantizedTree tree;
  std::vector<KeyRef> bindings;
};

SelectorTree selector_tree() {
  auto split = [](int l, int r) {
    QuantizedNode n;
    n.feature = 0;
    n.threshold = 1;
    n.left = l;
    n.right = r;
    return n;
  };
  auto leaf = [](std::uint64_t v) {
    QuantizedNode n;
    n.value = v;
    return n;
  };
  SelectorTree f;
  f.tree.nodes = {split(1, 2), split(3, 4), split(7, 8), split(5, 6), leaf(1), leaf(3), leaf(0), leaf(1), leaf(0)};
  auto key = [](int k) { return KeyRef{KeyRef::Kind::kKey, k}; };
  f.bindings = {key(5), key(12), key(24), key(7), {}, {}, {}, {}, {}};
  return f;
}

TEST(TreeLogic, WorkedSelectorExample) {
  const SelectorTree f = selector_tree();
  const TreeLogic tl = tree_to_logic(f.tree, f.bindings, 0, 0);
  EXPECT_EQ(tl.unique_values, (std::vector<std::uint64_t>{0, 1, 3}));
  // 0 and 1 both have two paths; the tie goes to the smaller value.
  EXPECT_EQ(tl.default_value, 0u);
  EXPECT_EQ(tl.default_paths, 2u);
  ASSERT_EQ(tl.selectors.size(), 2u);
  EXPECT_EQ(tl.selectors[0].value, 1u);
  EXPECT_EQ(to_prefix(tl.selectors[0]), "(or (and k5 (not k12)) (and (not k5) k24))");
  EXPECT_EQ(tl.selectors[1].value, 3u);
  EXPECT_EQ(to_prefix(tl.selectors[1]), "(and k5 k12 k7)");
  EXPECT_EQ(tl.out_width, 2);
  EXPECT_EQ(tl.path_count(), 5u);
  EXPECT_EQ(tl.used_keys(), (std::vector<int>{5, 7, 12, 24}));
}

TEST(TreeLogic, SingleLeafTree) {
  QuantizedTree t;
  QuantizedNode n;
  n.value = 6;
  t.nodes = {n};
  const TreeLogic tl = tree_to_logic(t, std::vector<KeyRef>{{}}, 0, 0);
  EXPECT_EQ(tl.unique_values, (std::vector<std::uint64_t>{6}));
  EXPECT_TRUE(tl.selectors.empty());
  EXPECT_EQ(tl.default_value, 6u);
  EXPECT_EQ(tl.evaluate(std::vector<std::uint8_t>{}), 6u);
}

std::uint64_t traverse_with_keys(const QuantizedTree& t, std::span<const KeyRef> b, std::span<const std::uint8_t> bits) {
  std::size_t i = 0;
  while (!t.nodes[i].is_leaf()) {
    bool left = false;
    switch (b[i].kind) {
      case KeyRef::Kind::kAlwaysLeft: left = true; break;
      case KeyRef::Kind::kAlwaysRight: left = false; break;
      case KeyRef::Kind::kKey: left = bits[static_cast<std::size_t>(b[i].key)] != 0; break;
    }
    i = static_cast<std::size_t>(left ? t.nodes[i].left : t.nodes[i].right);
  }
  return t.nodes[i].value;
}

TEST(TreeLogic, ExhaustiveKeyAssignmentsMatchTraversal) {
  std::mt19937_64 rng(202);
  int checked = 0;
  while (checked < 60) {
    const QuantizedEnsemble q = random_quantized(rng);
    const KeySet ks = build_keys(q);
    if (ks.keys.size() > 12) continue;
    ++checked;
    const std::size_t K = ks.keys.size();
    for (std::size_t t = 0; t < q.trees.size(); ++t) {
      const TreeLogic tl = tree_to_logic(q.trees[t], ks.bindings[t], 0, 0);
      std::vector<std::uint8_t> bits(K);
      for (std::uint32_t a = 0; a < (1u << K); ++a) {
        for (std::size_t k = 0; k < K; ++k) bits[k] = (a >> k) & 1u;
        int true_selectors = 0;
        for (const auto& s : tl.selectors) {
          bool any = false;
          for (const auto& p : s.paths) any = any || path_holds(p, bits);
          true_selectors += any ? 1 : 0;
        }
        ASSERT_LE(true_selectors, 1);
        ASSERT_EQ(tl.evaluate(bits), traverse_with_keys(q.trees[t], ks.bindings[t], bits));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Adder trees

TEST(AdderTree, EvenRegisterPlacement) {
  EXPECT_EQ(even_register_levels(6, 1), (std::vector<int>{3}));
  EXPECT_EQ(even_register_levels(6, 2), (std::vector<int>{2, 4}));
  EXPECT_EQ(even_register_levels(3, 2), (std::vector<int>{1, 2}));
  EXPECT_TRUE(even_register_levels(0, 0).empty());
  EXPECT_GBRTL_ERROR(even_register_levels(1, 1), ErrorKind::kConfig, "more stages than adder levels");
  EXPECT_GBRTL_ERROR(even_register_levels(2, 3), ErrorKind::kConfig, "more stages than adder levels");
}

TEST(AdderTree, SixtyFourOperandsGiveDepthSix) {
  const std::vector<std::uint64_t> ops(64, 7);
  const AdderTree at = build_adder_tree(ops, std::nullopt, 1);
  EXPECT_EQ(at.depth(), 6);
  EXPECT_EQ(at.register_levels, (std::vector<int>{3}));
  EXPECT_EQ(at.root().max_value, 64u * 7u);
}

TEST(AdderTree, SingleOperandHasNoLevels) {
  const std::vector<std::uint64_t> ops = {5};
  const AdderTree at = build_adder_tree(ops, std::nullopt, 0);
  EXPECT_EQ(at.depth(), 0);
  EXPECT_EQ(at.root().max_value, 5u);
}

TEST(AdderTree, OddOperandsPassThroughAndBiasIsLast) {
  const std::vector<std::uint64_t> ops = {1, 2, 3, 4};
  const AdderTree at = build_adder_tree(ops, 9, 0);
  ASSERT_EQ(at.levels.size(), 4u);
  EXPECT_EQ(at.levels[0].size(), 5u);
  EXPECT_EQ(at.levels[1].size(), 3u);
  EXPECT_EQ(at.levels[2].size(), 2u);
  EXPECT_TRUE(at.levels[0][4].constant);
  EXPECT_EQ(at.levels[1][2].right, -1);  // bias passes through
  EXPECT_TRUE(at.levels[1][2].constant);
  EXPECT_EQ(at.root().max_value, 1u + 2 + 3 + 4 + 9);
}

TEST(AdderTree, RootWidthMatchesExhaustiveMax) {
  const int w = 2;
  const std::vector<std::uint64_t> ops(7, (1u << w) - 1);
  const AdderTree at = build_adder_tree(ops, std::nullopt, 0);
  std::uint64_t best = 0;
  for (std::uint32_t a = 0; a < (1u << (2 * 7)); ++a) {
    std::uint64_t s = 0;
    for (int i = 0; i < 7; ++i) s += (a >> (2 * i)) & 3u;
    best = std::max(best, s);
  }
  EXPECT_EQ(at.root().max_value, best);
  EXPECT_EQ(at.root().width, bits_for(best));
}

// ---------------------------------------------------------------------------
// Netlist

TEST(Netlist, WorkedExampleStructure) {
  const Netlist n = build_netlist(worked_example_quantized(), PipelineConfig{});
  EXPECT_EQ(n.threshold, 5);
  EXPECT_FALSE(n.constant_classifier);
  EXPECT_EQ(n.trees.size(), 2u);
  ASSERT_EQ(n.adders.size(), 1u);
  EXPECT_EQ(n.adders[0].tree_operands, 2u);
  EXPECT_FALSE(n.adders[0].bias);
  EXPECT_EQ(n.latency_cycles(), 0);

  const NetlistOutput out = interpret_netlist(n, std::vector<QValue>{2, 15, 4, 1, 5});
  EXPECT_EQ(out.y, 0);
  EXPECT_EQ(out.sums, (std::vector<std::uint64_t>{3}));  // 0 + 3 < 5
}

TEST(Netlist, LatencyIsSumOfStages) {
  EXPECT_EQ(build_netlist(worked_example_quantized(), PipelineConfig{1, 1, 0}).latency_cycles(), 2);
  // Two trees give one adder level, which cannot hold an inner register.
  EXPECT_GBRTL_ERROR(build_netlist(worked_example_quantized(), PipelineConfig{0, 1, 1}), ErrorKind::kConfig,
                     "more stages than adder levels");
  const QuantizedEnsemble q =
      quantize_binary(integerize_thresholds(load_model_file(fixture_path("binary_xgb.json"))), 4, 3);
  EXPECT_EQ(build_netlist(q, PipelineConfig{0, 1, 1}).latency_cycles(), 2);
}

TEST(Netlist, PipelineConfigParsing) {
  EXPECT_EQ(PipelineConfig::parse("0,1,1"), (PipelineConfig{0, 1, 1}));
  EXPECT_EQ(PipelineConfig::parse("[1, 0, 2]"), (PipelineConfig{1, 0, 2}));
  EXPECT_EQ((PipelineConfig{0, 1, 1}).to_string(), "[0, 1, 1]");
  EXPECT_EQ(PipelineConfig::parse((PipelineConfig{1, 0, 2}).to_string()), (PipelineConfig{1, 0, 2}));
  EXPECT_GBRTL_ERROR(PipelineConfig::parse("0,1"), ErrorKind::kConfig, "");
  EXPECT_GBRTL_ERROR(PipelineConfig::parse("2,0,0"), ErrorKind::kConfig, "");
  EXPECT_GBRTL_ERROR(PipelineConfig::parse("0,0,-1"), ErrorKind::kConfig, "");
  EXPECT_GBRTL_ERROR(PipelineConfig::parse("a,b,c"), ErrorKind::kConfig, "");
}

TEST(Netlist, ConstantClassifierAlwaysOutputsOne) {
  QuantizedEnsemble q = worked_example_quantized();
  q.biases[0] = 2;
  const Netlist n = build_netlist(q, PipelineConfig{});
  EXPECT_TRUE(n.constant_classifier);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(interpret_netlist(n, testing::random_input(5, 4, rng)).y, 1);
}

TEST(Netlist, RejectsOutOfRangeInputs) {
  const Netlist n = build_netlist(worked_example_quantized(), PipelineConfig{});
  EXPECT_GBRTL_ERROR(interpret_netlist(n, std::vector<QValue>{16, 0, 0, 0, 0}), ErrorKind::kContract, "");
  EXPECT_GBRTL_ERROR(interpret_netlist(n, std::vector<QValue>{1, 0}), ErrorKind::kContract, "");
}

TEST(Netlist, WidthsBoundEveryReachableSum) {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 40; ++i) {
    const QuantizedEnsemble q = random_quantized(rng);
    const Netlist n = build_netlist(q, PipelineConfig{});
    for (const auto& at : n.adders)
      for (const auto& level : at.levels)
        for (const auto& node : level) EXPECT_GE(node.width, bits_for(node.max_value));
    for (int s = 0; s < 100; ++s) {
      const auto out = interpret_netlist(n, testing::random_input(q.num_features, q.w_feature, rng));
      for (std::size_t g = 0; g < out.sums.size(); ++g) EXPECT_LE(bits_for(out.sums[g]), n.sum_width);
    }
  }
}

TEST(Netlist, InterpreterMatchesQuantizedEvaluator) {
  std::mt19937_64 rng(404);
  for (int i = 0; i < 40; ++i) {
    const QuantizedEnsemble q = random_quantized(rng);
    const Netlist n = build_netlist(q, PipelineConfig{});
    for (int s = 0; s < 200; ++s) {
      const auto x = testing::random_input(q.num_features, q.w_feature, rng);
      const auto p = predict_quantized(q, x);
      const auto out = interpret_netlist(n, x);
      if (q.task == TaskKind::kBinaryLogistic) {
        ASSERT_EQ(out.y, p.predicted_class);
        ASSERT_EQ(static_cast<std::int64_t>(out.sums[0]) + q.biases[0], p.qf[0]);
      } else {
        for (std::size_t g = 0; g < p.qf.size(); ++g) ASSERT_EQ(static_cast<std::int64_t>(out.sums[g]), p.qf[g]);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Pipeline

TEST(Pipeline, OutputsAppearExactlyLatencyCyclesLater) {
  std::mt19937_64 rng(505);
  for (int i = 0; i < 30; ++i) {
    const QuantizedEnsemble q = random_quantized(rng, 3);
    for (int p0 = 0; p0 <= 1; ++p0)
      for (int p1 = 0; p1 <= 1; ++p1)
        for (int p2 = 0; p2 <= 2; ++p2) {
          const Netlist n = build_netlist(q, PipelineConfig{p0, p1, p2});
          std::vector<std::vector<QValue>> stream;
          for (int s = 0; s < 40; ++s) stream.push_back(testing::random_input(q.num_features, q.w_feature, rng));
          const auto out = simulate_pipelined(n, stream);
          const auto L = static_cast<std::size_t>(p0 + p1 + p2);
          ASSERT_EQ(out.size(), stream.size() + L);
          for (std::size_t t = 0; t < L; ++t) EXPECT_FALSE(out[t].has_value());
          for (std::size_t t = 0; t < stream.size(); ++t) {
            ASSERT_TRUE(out[t + L].has_value());
            ASSERT_EQ(*out[t + L], interpret_netlist(n, stream[t]));
          }
        }
  }
}

TEST(Pipeline, BubblesFlowThrough) {
  const QuantizedEnsemble q =
      quantize_binary(integerize_thresholds(load_model_file(fixture_path("binary_xgb.json"))), 4, 3);
  const Netlist n = build_netlist(q, PipelineConfig{1, 1, 1});
  PipelineSimulator sim(n);
  const std::vector<QValue> x = {1, 2, 3, 4, 5, 6};
  EXPECT_FALSE(sim.step(std::span<const QValue>(x)));
  EXPECT_FALSE(sim.step(std::nullopt));
  EXPECT_FALSE(sim.step(std::nullopt));
  const auto out = sim.step(std::nullopt);
  ASSERT_TRUE(out);
  EXPECT_EQ(*out, interpret_netlist(n, x));
  EXPECT_FALSE(sim.step(std::nullopt));
}

TEST(Pipeline, RegisterBitsAgreeWithStats) {
  std::mt19937_64 rng(606);
  for (int i = 0; i < 30; ++i) {
    const QuantizedEnsemble q = random_quantized(rng, 2);
    const PipelineConfig p{i % 2, (i / 2) % 2, 1};
    const Netlist n = build_netlist(q, p);
    PipelineSimulator sim(n);
    EXPECT_EQ(sim.register_bits(), stats(n).register_bits);
  }
}

TEST(Stats, WorkedExample) {
  const NetlistStats s = stats(build_netlist(worked_example_quantized(), PipelineConfig{1, 1, 0}));
  EXPECT_EQ(s.key_count, 5u);
  EXPECT_EQ(s.tree_count, 2u);
  EXPECT_EQ(s.unique_values_per_tree, (std::vector<std::size_t>{4, 4}));
  EXPECT_EQ(s.path_count, 8u);
  // 5 key bits + 3 + 3 tree output bits
  EXPECT_EQ(s.register_bits, 11u);
  EXPECT_EQ(s.latency_cycles, 2);
  const std::string dump = netlist_to_json(build_netlist(worked_example_quantized(), PipelineConfig{}));
  EXPECT_NE(dump.find("(and"), std::string::npos);
}

}  // namespace
}  // namespace gbrtl
