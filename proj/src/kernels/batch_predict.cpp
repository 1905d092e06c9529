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
#include "gbrtl/kernels/batch_predict.hpp"

#include <algorithm>
#include <limits>

#include "gbrtl/error.hpp"

namespace gbrtl::kernels {

const char* to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2:
#if defined(GBRTL_HAVE_AVX2_KERNEL)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() noexcept { return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar; }

FlatEnsemble FlatEnsemble::from(const QuantizedEnsemble& q) {
  FlatEnsemble m;
  m.num_features = q.num_features;
  m.num_groups = q.num_groups();
  m.bias = q.biases;

  // Thresholds outside the code range act the same once clamped to
  // [0, 2^w_feature]; this keeps them in int32.
  const std::int64_t hi = std::int64_t{1} << q.w_feature;
  constexpr std::int64_t kI32Max = std::numeric_limits<std::int32_t>::max();
  std::vector<std::int64_t> group_max(static_cast<std::size_t>(m.num_groups), 0);

  for (std::size_t t = 0; t < q.trees.size(); ++t) {
    const auto& tree = q.trees[t];
    const auto base = static_cast<std::int32_t>(m.feature.size());
    m.root.push_back(base);
    m.group.push_back(q.group_of(t));
    int depth = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      const auto& n = tree.nodes[static_cast<std::size_t>(i)];
      if (n.is_leaf()) {
        depth = std::max(depth, d);
      } else {
        stack.emplace_back(n.left, d + 1);
        stack.emplace_back(n.right, d + 1);
      }
    }
    m.depth.push_back(depth);

    std::int64_t tree_max = 0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& n = tree.nodes[i];
      const auto self = base + static_cast<std::int32_t>(i);
      if (n.is_leaf()) {
        m.feature.push_back(0);
        m.threshold.push_back(0);
        m.left.push_back(self);
        m.right.push_back(self);
        if (n.value > static_cast<std::uint64_t>(kI32Max)) m.fits_int32 = false;
        const auto v32 = static_cast<std::int32_t>(std::min<std::uint64_t>(n.value, kI32Max));
        m.value.push_back(static_cast<std::int64_t>(n.value));
        m.value32.push_back(v32);
        tree_max = std::max<std::int64_t>(tree_max, v32);
      } else {
        m.feature.push_back(n.feature);
        m.threshold.push_back(static_cast<std::int32_t>(std::clamp<std::int64_t>(n.threshold, 0, hi)));
        m.left.push_back(base + n.left);
        m.right.push_back(base + n.right);
        m.value.push_back(0);
        m.value32.push_back(0);
      }
    }
    group_max[static_cast<std::size_t>(q.group_of(t))] += tree_max;
  }
  for (std::size_t g = 0; g < group_max.size(); ++g) {
    const std::int64_t b = m.bias[g];
    if (group_max[g] + std::max<std::int64_t>(b, 0) > kI32Max || b < -kI32Max) m.fits_int32 = false;
  }
  return m;
}

void predict_batch_scalar(const FlatEnsemble& model, std::span<const QValue> rows_x, std::size_t rows,
                          std::span<std::int64_t> qf_out) {
  const auto F = static_cast<std::size_t>(model.num_features);
  const auto G = static_cast<std::size_t>(model.num_groups);
  for (std::size_t r = 0; r < rows; ++r) {
    const QValue* x = rows_x.data() + r * F;
    std::int64_t* out = qf_out.data() + r * G;
    for (std::size_t g = 0; g < G; ++g) out[g] = model.bias[g];
    for (std::size_t t = 0; t < model.root.size(); ++t) {
      auto i = static_cast<std::size_t>(model.root[t]);
      while (model.left[i] != static_cast<std::int32_t>(i)) {
        const auto xv = static_cast<std::int64_t>(x[model.feature[i]]);
        i = static_cast<std::size_t>(xv < model.threshold[i] ? model.left[i] : model.right[i]);
      }
      out[model.group[t]] += model.value[i];
    }
  }
}

void predict_batch(const FlatEnsemble& model, std::span<const QValue> rows_x, std::size_t rows,
                   std::span<std::int64_t> qf_out, Isa isa) {
  if (rows_x.size() < rows * static_cast<std::size_t>(model.num_features) ||
      qf_out.size() < rows * static_cast<std::size_t>(model.num_groups)) {
    fail(ErrorKind::kContract, "batch buffers are smaller than rows x features / groups");
  }
#if defined(GBRTL_HAVE_AVX2_KERNEL)
  if (isa == Isa::kAvx2 && isa_supported(Isa::kAvx2) && model.fits_int32) {
    predict_batch_avx2(model, rows_x, rows, qf_out);
    return;
  }
#else
  (void)isa;
#endif
  predict_batch_scalar(model, rows_x, rows, qf_out);
}

}  // namespace gbrtl::kernels
