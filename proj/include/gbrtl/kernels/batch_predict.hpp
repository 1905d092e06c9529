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
#include <cstdint>
#include <span>
#include <vector>

#include "gbrtl/feature_quantizer.hpp"
#include "gbrtl/leaf_quantizer.hpp"

namespace gbrtl::kernels {

enum class Isa { kScalar, kAvx2 };

const char* to_string(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
/// Widest instruction set compiled in and supported by the running CPU.
Isa best_isa() noexcept;

/// Structure-of-arrays view of a QuantizedEnsemble for batch traversal.
///
/// All trees share one node pool. Leaves loop onto themselves
/// (left == right == self, threshold 0), so a traversal may run a fixed
/// number of steps per tree without branching on leaf-ness.
struct FlatEnsemble {
  int num_features = 0;
  int num_groups = 1;
  std::vector<std::int32_t> feature;
  std::vector<std::int32_t> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<std::int64_t> value;
  std::vector<std::int32_t> value32;  // saturated copy for the vector kernels
  std::vector<std::int32_t> root;   // per tree
  std::vector<std::int32_t> depth;  // per tree
  std::vector<std::int32_t> group;  // per tree
  std::vector<std::int64_t> bias;   // per group
  /// False when some leaf or class sum could leave int32; the vector
  /// kernels then defer to the scalar one.
  bool fits_int32 = true;

  static FlatEnsemble from(const QuantizedEnsemble& q);
};

/// qf_out[r * num_groups + g] = bias_g + sum of group-g leaves reached by row r.
/// `rows_x` is row-major with num_features codes per row.
void predict_batch_scalar(const FlatEnsemble& model, std::span<const QValue> rows_x, std::size_t rows,
                          std::span<std::int64_t> qf_out);

#if defined(GBRTL_HAVE_AVX2_KERNEL)
void predict_batch_avx2(const FlatEnsemble& model, std::span<const QValue> rows_x, std::size_t rows,
                        std::span<std::int64_t> qf_out);
#endif

/// Runs the requested kernel, falling back to scalar when it is unavailable.
void predict_batch(const FlatEnsemble& model, std::span<const QValue> rows_x, std::size_t rows,
                   std::span<std::int64_t> qf_out, Isa isa = best_isa());

}  // namespace gbrtl::kernels
