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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gbrtl/ensemble.hpp"
#include "gbrtl/io.hpp"

namespace gbrtl {

using QValue = std::uint32_t;

/// Uniform min-max input quantizer.
///
/// transform() maps each feature to round((x - min) / (max - min) * (2^w - 1))
/// after clamping the normalized value to [0, 1]. Rounding is half away from
/// zero. Constant features (min == max) map to 0.
struct FeatureQuantizer {
  static constexpr int kMaxBits = 16;

  int w_feature = 0;
  std::vector<double> mins;
  std::vector<double> maxs;

  int num_features() const noexcept { return static_cast<int>(mins.size()); }
  QValue max_code() const noexcept { return (QValue{1} << w_feature) - 1; }

  friend bool operator==(const FeatureQuantizer&, const FeatureQuantizer&) = default;
};

void validate(const FeatureQuantizer& q);

FeatureQuantizer fit_quantizer(const Dataset& data, int w_feature);

std::vector<QValue> transform(const FeatureQuantizer& q, std::span<const double> x);

/// Row-major transform of a whole dataset.
std::vector<QValue> transform_dataset(const FeatureQuantizer& q, const Dataset& data);

/// Replaces every threshold t by ceil(t). For integer x, x < t iff x < ceil(t).
GbdtEnsemble integerize_thresholds(const GbdtEnsemble& ensemble);

/// JSON { "w_feature", "mins": [...], "maxs": [...] }.
std::string to_json(const FeatureQuantizer& q);
FeatureQuantizer parse_quantizer_json(std::string_view text);
FeatureQuantizer load_quantizer_file(const std::string& path);

}  // namespace gbrtl
