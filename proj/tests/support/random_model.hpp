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
#include <random>
#include <string>
#include <vector>

#include "gbrtl/ensemble.hpp"
#include "gbrtl/feature_quantizer.hpp"
#include "gbrtl/leaf_quantizer.hpp"

namespace gbrtl::testing {

struct RandomModelSpec {
  TaskKind task = TaskKind::kBinaryLogistic;
  int num_classes = 2;
  int trees_per_group = 4;
  int max_depth = 3;
  int num_features = 4;
  int w_feature = 4;
};

/// Random tree ensemble in quantized feature space. Thresholds are real
/// numbers spread slightly beyond [0, 2^w_feature - 1], so some comparisons
/// fold to constants. Leaves are drawn from N(0, 1).
GbdtEnsemble random_ensemble(const RandomModelSpec& spec, std::mt19937_64& rng);

/// Spec with random task, classes, tree count and widths within the
/// acceptance bounds (M <= 16, depth <= 5, w_feature <= 6). When
/// `min_adder_depth` > 0, M is raised so every class's adder tree has at
/// least that many levels.
RandomModelSpec random_spec(std::mt19937_64& rng, int min_adder_depth = 0);

std::vector<QValue> random_input(int num_features, int w_feature, std::mt19937_64& rng);

/// F(x) for codes, in the quantized feature domain.
std::vector<double> float_margin_on_codes(const GbdtEnsemble& e, const std::vector<QValue>& qx);

std::string fixture_path(const std::string& name);

}  // namespace gbrtl::testing
