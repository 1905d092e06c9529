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

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "gbrtl/error.hpp"

namespace gbrtl {

// ---------------------------------------------------------------------------
// Keys

KeySet build_keys(const QuantizedEnsemble& q) {
  const std::int64_t max_code = (std::int64_t{1} << q.w_feature) - 1;
  std::set<std::pair<int, std::int64_t>> pairs;
  for (const auto& tree : q.trees)
    for (const auto& n : tree.nodes)
      if (!n.is_leaf() && n.threshold >= 1 && n.threshold <= max_code) pairs.emplace(n.feature, n.threshold);

  KeySet ks;
  std::map<std::pair<int, std::int64_t>, int> index;
  for (const auto& [f, t] : pairs) {
    int id = static_cast<int>(ks.keys.size());
    ks.keys.push_back(Key{id, f, static_cast<QValue>(t)});
    index.emplace(std::pair{f, t}, id);
  }

  ks.bindings.reserve(q.trees.size());
  for (const auto& tree : q.trees) {
    std::vector<KeyRef> b(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& n = tree.nodes[i];
      if (n.is_leaf()) continue;
      if (n.threshold <= 0) {
        b[i].kind = KeyRef::Kind::kAlwaysRight;  // x < T never holds
        ++ks.folded_nodes;
      } else if (n.threshold > max_code) {
        b[i].kind = KeyRef::Kind::kAlwaysLeft;
        ++ks.folded_nodes;
      } else {
        b[i].key = index.at({n.feature, n.threshold});
      }
    }
    ks.bindings.push_back(std::move(b));
  }
  return ks;
}

std::vector<std::uint8_t> evaluate_keys(std::span<const Key> keys, std::span<const QValue> qx) {
  std::vector<std::uint8_t> bits(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    bits[i] = qx[static_cast<std::size_t>(keys[i].feature)] < keys[i].threshold ? 1 : 0;
  return bits;
}

// ---------------------------------------------------------------------------
// Tree logic

bool path_holds(const Path& path, std::span<const std::uint8_t> key_bits) {
  for (const Literal& lit : path)
    if ((key_bits[static_cast<std::size_t>(lit.key)] != 0) != lit.positive) return false;
  return true;
}

std::size_t TreeLogic::path_count() const {
  std::size_t n = default_paths;
  for (const auto& s : selectors) n += s.paths.size();
  return n;
}

std::uint64_t TreeLogic::evaluate(std::span<const std::uint8_t> key_bits) const {
  for (const auto& s : selectors)
    for (const auto& p : s.paths)
      if (path_holds(p, key_bits)) return s.value;
  return default_value;
}

std::vector<int> TreeLogic::used_keys() const {
  std::set<int> keys;
  for (const auto& s : selectors)
    for (const auto& p : s.paths)
      for (const auto& lit : p) keys.insert(lit.key);
  return {keys.begin(), keys.end()};
}

namespace {

struct PathWalker {
  const QuantizedTree& tree;
  std::span<const KeyRef> bindings;
  std::map<std::uint64_t, std::vector<Path>> by_value;

  void walk(int node, Path& path) {
    const QuantizedNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) {
      by_value[n.value].push_back(path);
      return;
    }
    const KeyRef& ref = bindings[static_cast<std::size_t>(node)];
    if (ref.kind == KeyRef::Kind::kAlwaysLeft) return walk(n.left, path);
    if (ref.kind == KeyRef::Kind::kAlwaysRight) return walk(n.right, path);

    for (bool positive : {true, false}) {
      const int child = positive ? n.left : n.right;
      auto seen = std::find_if(path.begin(), path.end(), [&](const Literal& l) { return l.key == ref.key; });
      if (seen != path.end()) {
        // A key repeated on one route: the same polarity is redundant, the
        // opposite one makes the route unreachable.
        if (seen->positive == positive) walk(child, path);
        continue;
      }
      path.push_back(Literal{ref.key, positive});
      walk(child, path);
      path.pop_back();
    }
  }
};

}  // namespace

TreeLogic tree_to_logic(const QuantizedTree& tree, std::span<const KeyRef> bindings, int class_index,
                        int tree_index) {
  PathWalker walker{tree, bindings, {}};
  Path scratch;
  walker.walk(0, scratch);

  TreeLogic logic;
  logic.class_index = class_index;
  logic.tree_index = tree_index;
  std::size_t best = 0;
  for (const auto& [value, paths] : walker.by_value) {
    logic.unique_values.push_back(value);
    // Ascending iteration: strict '>' keeps the smaller value on ties.
    if (paths.size() > best) {
      best = paths.size();
      logic.default_value = value;
    }
  }
  logic.default_paths = best;
  for (auto& [value, paths] : walker.by_value) {
    if (value == logic.default_value) continue;
    logic.selectors.push_back(Selector{value, std::move(paths)});
  }
  logic.out_width = bits_for(logic.unique_values.back());
  return logic;
}

std::string to_prefix(const Selector& selector) {
  auto literal = [](const Literal& l) {
    std::string k = "k" + std::to_string(l.key);
    return l.positive ? k : "(not " + k + ")";
  };
  auto product = [&](const Path& p) {
    if (p.empty()) return std::string("1");
    if (p.size() == 1) return literal(p.front());
    std::string s = "(and";
    for (const auto& l : p) s += " " + literal(l);
    return s + ")";
  };
  if (selector.paths.size() == 1) return product(selector.paths.front());
  std::string s = "(or";
  for (const auto& p : selector.paths) s += " " + product(p);
  return s + ")";
}

// ---------------------------------------------------------------------------
// Pipeline config

PipelineConfig PipelineConfig::parse(std::string_view text) {
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }), s.end());
  std::vector<int> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = s.find(',', start);
    std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    int v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      fail(ErrorKind::kConfig, "pipeline must be three comma-separated integers, got '" + std::string(text) + "'");
    }
    parts.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3) {
    fail(ErrorKind::kConfig, "pipeline must be three comma-separated integers, got '" + std::string(text) + "'");
  }
  PipelineConfig p{parts[0], parts[1], parts[2]};
  validate(p);
  return p;
}

std::string PipelineConfig::to_string() const {
  return "[" + std::to_string(p0) + ", " + std::to_string(p1) + ", " + std::to_string(p2) + "]";
}

void validate(const PipelineConfig& p) {
  if (p.p0 < 0 || p.p0 > 1 || p.p1 < 0 || p.p1 > 1 || p.p2 < 0) {
    fail(ErrorKind::kConfig, "pipeline " + p.to_string() + ": p0 and p1 must be 0 or 1 and p2 nonnegative");
  }
}

// ---------------------------------------------------------------------------
// Adder trees

bool AdderTree::registered_after(int level) const {
  return std::find(register_levels.begin(), register_levels.end(), level) != register_levels.end();
}

std::vector<int> even_register_levels(int depth, int p2) {
  if (p2 < 0) fail(ErrorKind::kConfig, "negative adder pipeline stage count");
  if (p2 > 0 && p2 >= depth) {
    fail(ErrorKind::kConfig, "more stages than adder levels: p2 = " + std::to_string(p2) + " needs an adder depth > " +
                                 std::to_string(p2) + ", got " + std::to_string(depth));
  }
  std::vector<int> levels;
  for (int i = 1; i <= p2; ++i) levels.push_back(depth * i / (p2 + 1));
  return levels;
}

AdderTree build_adder_tree(std::span<const std::uint64_t> operand_max, std::optional<std::uint64_t> bias, int p2) {
  if (operand_max.empty() && !bias) fail(ErrorKind::kConfig, "adder tree needs at least one operand");
  AdderTree at;
  at.tree_operands = operand_max.size();
  at.bias = bias;

  std::vector<AdderNode> level;
  for (std::uint64_t m : operand_max) level.push_back(AdderNode{-1, -1, m, bits_for(m), false, 0});
  if (bias) level.push_back(AdderNode{-1, -1, *bias, bits_for(*bias), true, *bias});
  at.levels.push_back(level);

  while (at.levels.back().size() > 1) {
    const auto& prev = at.levels.back();
    std::vector<AdderNode> next;
    for (std::size_t i = 0; i < prev.size(); i += 2) {
      AdderNode n;
      n.left = static_cast<int>(i);
      if (i + 1 < prev.size()) {
        n.right = static_cast<int>(i + 1);
        n.max_value = prev[i].max_value + prev[i + 1].max_value;
        n.constant = prev[i].constant && prev[i + 1].constant;
        n.constant_value = prev[i].constant_value + prev[i + 1].constant_value;
      } else {
        n.max_value = prev[i].max_value;
        n.constant = prev[i].constant;
        n.constant_value = prev[i].constant_value;
      }
      n.width = bits_for(n.max_value);
      next.push_back(n);
    }
    at.levels.push_back(std::move(next));
  }
  at.register_levels = even_register_levels(at.depth(), p2);
  return at;
}

// ---------------------------------------------------------------------------
// Netlist assembly

Netlist build_netlist(const QuantizedEnsemble& q, const PipelineConfig& pipeline) {
  validate(pipeline);
  if (q.trees.empty() && q.task == TaskKind::kBinaryLogistic) {
    fail(ErrorKind::kConfig, "binary netlist needs at least one tree");
  }
  Netlist n;
  n.task = q.task;
  n.num_classes = q.num_classes;
  n.num_features = q.num_features;
  n.w_feature = q.w_feature;
  n.w_tree = q.w_tree;
  n.pipeline = pipeline;
  n.scale = q.scale;
  n.biases = q.biases;

  KeySet ks = build_keys(q);
  n.keys = ks.keys;
  n.folded_nodes = ks.folded_nodes;

  const auto groups = static_cast<std::size_t>(q.num_groups());
  const std::size_t per_group = q.trees_per_group();
  n.trees.reserve(q.trees.size());
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t m = 0; m < per_group; ++m) {
      const std::size_t flat = m * groups + g;
      n.trees.push_back(tree_to_logic(q.trees[flat], ks.bindings[flat], static_cast<int>(g), static_cast<int>(m)));
    }

  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<std::uint64_t> maxes;
    for (std::size_t m = 0; m < per_group; ++m) maxes.push_back(n.trees[g * per_group + m].unique_values.back());
    std::optional<std::uint64_t> bias;
    if (q.task == TaskKind::kMulticlassSoftmax) bias = static_cast<std::uint64_t>(q.biases[g]);
    n.adders.push_back(build_adder_tree(maxes, bias, pipeline.p2));
    n.sum_width = std::max(n.sum_width, n.adders.back().root().width);
  }

  if (q.task == TaskKind::kBinaryLogistic) {
    n.threshold = -q.biases[0];
    n.constant_classifier = q.biases[0] > 0;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Combinational interpreter

namespace {

void check_input(const Netlist& n, std::span<const QValue> qx) {
  if (qx.size() != static_cast<std::size_t>(n.num_features)) {
    fail(ErrorKind::kContract, "netlist expects " + std::to_string(n.num_features) + " features, got " +
                                   std::to_string(qx.size()));
  }
  for (std::size_t f = 0; f < qx.size(); ++f)
    if (qx[f] > n.max_feature_code()) {
      fail(ErrorKind::kContract, "feature " + std::to_string(f) + " value " + std::to_string(qx[f]) + " exceeds " +
                                     std::to_string(n.w_feature) + "-bit range");
    }
}

void check_width(const AdderNode& node, std::uint64_t value) {
  if (value > node.max_value || (node.width < 64 && (value >> node.width) != 0)) {
    fail(ErrorKind::kContract, "adder value " + std::to_string(value) + " exceeds its " + std::to_string(node.width) +
                                   "-bit bound");
  }
}

int binary_decision(const Netlist& n, std::uint64_t sum) {
  if (n.threshold <= 0) return 1;
  return sum >= static_cast<std::uint64_t>(n.threshold) ? 1 : 0;
}

}  // namespace

NetlistOutput interpret_netlist(const Netlist& n, std::span<const QValue> qx) {
  check_input(n, qx);
  const auto bits = evaluate_keys(n.keys, qx);
  const std::size_t per_group = n.trees_per_group();

  NetlistOutput out;
  for (std::size_t g = 0; g < n.adders.size(); ++g) {
    const AdderTree& at = n.adders[g];
    std::vector<std::uint64_t> values;
    for (std::size_t m = 0; m < per_group; ++m) values.push_back(n.trees[g * per_group + m].evaluate(bits));
    if (at.bias) values.push_back(*at.bias);
    for (std::size_t i = 0; i < values.size(); ++i) check_width(at.levels[0][i], values[i]);

    for (int level = 1; level <= at.depth(); ++level) {
      const auto& nodes = at.levels[static_cast<std::size_t>(level)];
      std::vector<std::uint64_t> next(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const AdderNode& node = nodes[i];
        next[i] = values[static_cast<std::size_t>(node.left)] +
                  (node.right >= 0 ? values[static_cast<std::size_t>(node.right)] : 0);
        check_width(node, next[i]);
      }
      values = std::move(next);
    }
    out.sums.push_back(values.front());
  }
  if (n.task == TaskKind::kBinaryLogistic) out.y = binary_decision(n, out.sums.front());
  return out;
}

// ---------------------------------------------------------------------------
// Cycle-accurate pipeline
//
// The datapath is a chain of stages: 0 = key generator, 1 = tree logic,
// 1 + l = adder level l (l = 1..depth). Registers sit after stage 0 (p0),
// after stage 1 (p1), and after each adder register level.

namespace {

std::size_t num_stages(const Netlist& n) {
  return 2 + static_cast<std::size_t>(n.adders.empty() ? 0 : n.adders.front().depth());
}

// Adder level-0 operands for every group, concatenated.
std::vector<std::uint64_t> level_zero(const Netlist& n, const std::vector<std::uint64_t>& tree_outputs) {
  std::vector<std::uint64_t> out;
  const std::size_t per_group = n.trees_per_group();
  for (std::size_t g = 0; g < n.adders.size(); ++g) {
    for (std::size_t m = 0; m < per_group; ++m) out.push_back(tree_outputs[g * per_group + m]);
    if (n.adders[g].bias) out.push_back(*n.adders[g].bias);
  }
  return out;
}

std::vector<std::uint64_t> apply_stage(const Netlist& n, std::size_t stage, const std::vector<std::uint64_t>& in) {
  if (stage == 0) {
    std::vector<QValue> qx(in.begin(), in.end());
    auto bits = evaluate_keys(n.keys, qx);
    return {bits.begin(), bits.end()};
  }
  if (stage == 1) {
    std::vector<std::uint8_t> bits(in.begin(), in.end());
    std::vector<std::uint64_t> out;
    out.reserve(n.trees.size());
    for (const auto& t : n.trees) out.push_back(t.evaluate(bits));
    return out;
  }
  const int level = static_cast<int>(stage) - 1;
  const std::vector<std::uint64_t> prev = level == 1 ? level_zero(n, in) : in;
  std::vector<std::uint64_t> out;
  std::size_t base = 0;
  for (const auto& at : n.adders) {
    for (const AdderNode& node : at.levels[static_cast<std::size_t>(level)]) {
      std::uint64_t v = prev[base + static_cast<std::size_t>(node.left)];
      if (node.right >= 0) v += prev[base + static_cast<std::size_t>(node.right)];
      out.push_back(v);
    }
    base += at.levels[static_cast<std::size_t>(level) - 1].size();
  }
  return out;
}

std::size_t frame_register_bits(const Netlist& n, std::size_t stage) {
  if (stage == 0) return n.keys.size();
  std::size_t bits = 0;
  if (stage == 1) {
    for (const auto& t : n.trees) bits += static_cast<std::size_t>(t.out_width);
    return bits;
  }
  const auto level = stage - 1;
  for (const auto& at : n.adders)
    for (const auto& node : at.levels[level])
      if (!node.constant) bits += static_cast<std::size_t>(node.width);
  return bits;
}

}  // namespace

PipelineSimulator::PipelineSimulator(const Netlist& netlist) : netlist_(&netlist) {
  if (netlist.pipeline.p0) cut_after_.push_back(0);
  if (netlist.pipeline.p1) cut_after_.push_back(1);
  if (!netlist.adders.empty())
    for (int level : netlist.adders.front().register_levels) cut_after_.push_back(1 + level);
  registers_.resize(cut_after_.size());
  for (int stage : cut_after_) register_bits_ += frame_register_bits(netlist, static_cast<std::size_t>(stage));
}

PipelineSimulator::Frame PipelineSimulator::run_segment(std::size_t segment, const Frame& in) const {
  const std::size_t first = segment == 0 ? 0 : static_cast<std::size_t>(cut_after_[segment - 1]) + 1;
  const std::size_t last = segment < cut_after_.size() ? static_cast<std::size_t>(cut_after_[segment])
                                                       : num_stages(*netlist_) - 1;
  Frame f = in;
  for (std::size_t s = first; s <= last; ++s) f = apply_stage(*netlist_, s, f);
  return f;
}

NetlistOutput PipelineSimulator::finish(const Frame& last_stage) const {
  const Netlist& n = *netlist_;
  // With a depth-0 adder the final stage is the tree logic.
  const bool trees_only = num_stages(n) == 2;
  const Frame roots = trees_only ? level_zero(n, last_stage) : last_stage;
  NetlistOutput out;
  out.sums = roots;
  if (n.task == TaskKind::kBinaryLogistic) out.y = binary_decision(n, out.sums.front());
  return out;
}

std::optional<NetlistOutput> PipelineSimulator::step(std::optional<std::span<const QValue>> input) {
  std::optional<Frame> in_frame;
  if (input) {
    check_input(*netlist_, *input);
    in_frame = Frame(input->begin(), input->end());
  }
  const std::size_t L = registers_.size();

  // Combinational output during this cycle.
  std::optional<NetlistOutput> out;
  const std::optional<Frame>& tail = L == 0 ? in_frame : registers_[L - 1];
  if (tail) out = finish(run_segment(L, *tail));

  // Clock edge: update registers from the back so each reads its old input.
  for (std::size_t r = L; r-- > 0;) {
    const std::optional<Frame>& src = r == 0 ? in_frame : registers_[r - 1];
    registers_[r] = src ? std::optional<Frame>(run_segment(r, *src)) : std::nullopt;
  }
  return out;
}

std::vector<std::optional<NetlistOutput>> simulate_pipelined(const Netlist& netlist,
                                                             std::span<const std::vector<QValue>> stream) {
  PipelineSimulator sim(netlist);
  std::vector<std::optional<NetlistOutput>> outputs;
  outputs.reserve(stream.size() + static_cast<std::size_t>(sim.latency()));
  for (const auto& x : stream) outputs.push_back(sim.step(std::span<const QValue>(x)));
  for (int i = 0; i < sim.latency(); ++i) outputs.push_back(sim.step(std::nullopt));
  return outputs;
}

// ---------------------------------------------------------------------------
// Reports

NetlistStats stats(const Netlist& n) {
  NetlistStats s;
  s.key_count = n.keys.size();
  s.tree_count = n.trees.size();
  s.folded_nodes = n.folded_nodes;
  s.latency_cycles = n.latency_cycles();
  s.constant_classifier = n.constant_classifier;
  for (const auto& t : n.trees) {
    s.unique_values_per_tree.push_back(t.unique_values.size());
    s.path_count += t.path_count();
  }
  if (n.pipeline.p0) s.register_bits += n.keys.size();
  if (n.pipeline.p1)
    for (const auto& t : n.trees) s.register_bits += static_cast<std::size_t>(t.out_width);
  for (const auto& at : n.adders) {
    std::vector<int> widths;
    for (std::size_t l = 0; l < at.levels.size(); ++l) {
      int w = 0;
      for (const auto& node : at.levels[l]) {
        w = std::max(w, node.width);
        if (at.registered_after(static_cast<int>(l)) && !node.constant)
          s.register_bits += static_cast<std::size_t>(node.width);
      }
      widths.push_back(w);
    }
    s.adder_level_widths.push_back(std::move(widths));
    s.adder_root_widths.push_back(at.root().width);
  }
  return s;
}

}  // namespace gbrtl
