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

// Compiled with -mavx2; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "gbrtl/kernels/batch_predict.hpp"

namespace gbrtl::kernels {

namespace {

constexpr std::size_t kLanes = 8;

inline __m256i gather(const std::int32_t* base, __m256i idx) {
  return _mm256_i32gather_epi32(reinterpret_cast<const int*>(base), idx, 4);
}

}  // namespace

void predict_batch_avx2(const FlatEnsemble& model, std::span<const QValue> rows_x, std::size_t rows,
                        std::span<std::int64_t> qf_out) {
  const auto F = static_cast<std::size_t>(model.num_features);
  const auto G = static_cast<std::size_t>(model.num_groups);
  const std::size_t full = rows - rows % kLanes;

  // Lane l reads row (block + l): offset l * F from the block base.
  const __m256i lane_offset = _mm256_mullo_epi32(_mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7),
                                                 _mm256_set1_epi32(static_cast<int>(F)));
  // Per-group lane sums; plain int32 storage since vectors of __m256i lose alignment.
  std::vector<std::int32_t> acc(G * kLanes);

  for (std::size_t block = 0; block < full; block += kLanes) {
    // Codes are < 2^16, so the unsigned buffer reads correctly as int32.
    const auto* x = reinterpret_cast<const int*>(rows_x.data() + block * F);
    std::fill(acc.begin(), acc.end(), 0);

    for (std::size_t t = 0; t < model.root.size(); ++t) {
      __m256i node = _mm256_set1_epi32(model.root[t]);
      for (int step = 0; step < model.depth[t]; ++step) {
        const __m256i feat = gather(model.feature.data(), node);
        const __m256i thr = gather(model.threshold.data(), node);
        const __m256i xv = _mm256_i32gather_epi32(x, _mm256_add_epi32(lane_offset, feat), 4);
        const __m256i go_left = _mm256_cmpgt_epi32(thr, xv);
        const __m256i l = gather(model.left.data(), node);
        const __m256i r = gather(model.right.data(), node);
        node = _mm256_blendv_epi8(r, l, go_left);
      }
      const auto g = static_cast<std::size_t>(model.group[t]);
      auto* slot = reinterpret_cast<__m256i*>(acc.data() + g * kLanes);
      _mm256_storeu_si256(slot, _mm256_add_epi32(_mm256_loadu_si256(slot), gather(model.value32.data(), node)));
    }

    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t l = 0; l < kLanes; ++l)
        qf_out[(block + l) * G + g] = model.bias[g] + static_cast<std::int64_t>(acc[g * kLanes + l]);
  }

  if (full < rows) {
    predict_batch_scalar(model, rows_x.subspan(full * F), rows - full, qf_out.subspan(full * G));
  }
}

}  // namespace gbrtl::kernels
