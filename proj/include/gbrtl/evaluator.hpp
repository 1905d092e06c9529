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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbrtl/feature_quantizer.hpp"
#include "gbrtl/io.hpp"
#include "gbrtl/kernels/batch_predict.hpp"
#include "gbrtl/leaf_quantizer.hpp"

namespace gbrtl {

struct QuantizedPrediction {
  int predicted_class = 0;
  std::vector<std::int64_t> qf;  // QF (binary) or QF_n (multiclass), bias included
};

/// Binary: 1 iff QF >= 0. Multiclass: argmax, ties to the lowest class.
int decide_quantized_class(std::span<const std::int64_t> qf, TaskKind task);

/// Bit-exact software model of the generated hardware.
QuantizedPrediction predict_quantized(const QuantizedEnsemble& q, std::span<const QValue> qx);

struct PredictionReport {
  int num_groups = 1;
  int num_classes = 2;
  std::vector<int> predicted;     // per sample
  std::vector<std::int64_t> qf;   // row-major, num_groups per sample
  std::size_t labelled = 0;
  std::size_t correct = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted], empty without labels

  std::size_t size() const noexcept { return predicted.size(); }
  std::optional<double> accuracy() const {
    if (labelled == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(labelled);
  }
  /// Concatenates `other` after this report; associative.
  void merge(const PredictionReport& other);
};

/// Quantizes each row, predicts it with the batch kernel, aggregates.
PredictionReport evaluate_dataset(const QuantizedEnsemble& q, const FeatureQuantizer& quantizer, const Dataset& data,
                                  kernels::Isa isa = kernels::best_isa());

std::string to_json(const PredictionReport& report);
std::string format_table(const PredictionReport& report);

}  // namespace gbrtl
