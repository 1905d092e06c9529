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
#include "gbrtl/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "gbrtl/error.hpp"
#include "json.hpp"

namespace gbrtl {

int decide_quantized_class(std::span<const std::int64_t> qf, TaskKind task) {
  if (task == TaskKind::kBinaryLogistic) return qf[0] >= 0 ? 1 : 0;
  return static_cast<int>(std::max_element(qf.begin(), qf.end()) - qf.begin());
}

QuantizedPrediction predict_quantized(const QuantizedEnsemble& q, std::span<const QValue> qx) {
  if (qx.size() != static_cast<std::size_t>(q.num_features)) {
    fail(ErrorKind::kContract, "expected " + std::to_string(q.num_features) + " features, got " +
                                   std::to_string(qx.size()));
  }
  const QValue max_code = (QValue{1} << q.w_feature) - 1;
  for (std::size_t f = 0; f < qx.size(); ++f)
    if (qx[f] > max_code) {
      fail(ErrorKind::kContract, "feature " + std::to_string(f) + " value " + std::to_string(qx[f]) +
                                     " outside the " + std::to_string(q.w_feature) + "-bit range");
    }

  QuantizedPrediction p;
  p.qf = q.biases;
  for (std::size_t t = 0; t < q.trees.size(); ++t) {
    const auto& nodes = q.trees[t].nodes;
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(static_cast<std::int64_t>(qx[static_cast<std::size_t>(n.feature)]) < n.threshold
                                       ? n.left
                                       : n.right);
    }
    p.qf[static_cast<std::size_t>(q.group_of(t))] += static_cast<std::int64_t>(nodes[i].value);
  }
  p.predicted_class = decide_quantized_class(p.qf, q.task);
  return p;
}

void PredictionReport::merge(const PredictionReport& other) {
  if (predicted.empty() && labelled == 0 && confusion.empty()) {
    num_groups = other.num_groups;
    num_classes = other.num_classes;
  }
  predicted.insert(predicted.end(), other.predicted.begin(), other.predicted.end());
  qf.insert(qf.end(), other.qf.begin(), other.qf.end());
  labelled += other.labelled;
  correct += other.correct;
  if (confusion.empty()) {
    confusion = other.confusion;
  } else if (!other.confusion.empty()) {
    for (std::size_t i = 0; i < confusion.size(); ++i)
      for (std::size_t j = 0; j < confusion[i].size(); ++j) confusion[i][j] += other.confusion[i][j];
  }
}

PredictionReport evaluate_dataset(const QuantizedEnsemble& q, const FeatureQuantizer& quantizer, const Dataset& data,
                                  kernels::Isa isa) {
  if (quantizer.num_features() != q.num_features) {
    fail(ErrorKind::kData, "quantizer has " + std::to_string(quantizer.num_features()) + " features, model has " +
                               std::to_string(q.num_features));
  }
  if (quantizer.w_feature != q.w_feature) {
    fail(ErrorKind::kConfig, "quantizer w_feature " + std::to_string(quantizer.w_feature) +
                                 " differs from the model's " + std::to_string(q.w_feature));
  }
  const std::vector<QValue> codes = transform_dataset(quantizer, data);

  PredictionReport report;
  report.num_groups = q.num_groups();
  report.num_classes = q.num_classes;
  report.qf.resize(data.rows * static_cast<std::size_t>(report.num_groups));
  const auto flat = kernels::FlatEnsemble::from(q);
  kernels::predict_batch(flat, codes, data.rows, report.qf, isa);

  report.predicted.reserve(data.rows);
  const auto G = static_cast<std::size_t>(report.num_groups);
  for (std::size_t r = 0; r < data.rows; ++r)
    report.predicted.push_back(decide_quantized_class(std::span(report.qf).subspan(r * G, G), q.task));

  if (data.labels) {
    const auto C = static_cast<std::size_t>(q.num_classes);
    report.confusion.assign(C, std::vector<std::size_t>(C, 0));
    for (std::size_t r = 0; r < data.rows; ++r) {
      const int label = (*data.labels)[r];
      if (label < 0 || label >= q.num_classes) {
        fail(ErrorKind::kData, "row " + std::to_string(r + 1) + ": label " + std::to_string(label) +
                                   " outside [0, " + std::to_string(q.num_classes) + ")");
      }
      ++report.confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(report.predicted[r])];
      report.correct += label == report.predicted[r] ? 1 : 0;
    }
    report.labelled = data.rows;
  }
  return report;
}

std::string to_json(const PredictionReport& report) {
  nlohmann::ordered_json doc;
  doc["samples"] = report.size();
  doc["num_classes"] = report.num_classes;
  if (auto acc = report.accuracy()) {
    doc["accuracy"] = *acc;
    doc["correct"] = report.correct;
    doc["confusion"] = report.confusion;
  } else {
    doc["accuracy"] = nullptr;
  }
  doc["predicted"] = report.predicted;
  std::vector<std::vector<std::int64_t>> qf;
  const auto G = static_cast<std::size_t>(report.num_groups);
  for (std::size_t r = 0; r < report.size(); ++r)
    qf.emplace_back(report.qf.begin() + static_cast<std::ptrdiff_t>(r * G),
                    report.qf.begin() + static_cast<std::ptrdiff_t>((r + 1) * G));
  doc["qf"] = std::move(qf);
  return doc.dump(1) + "\n";
}

std::string format_table(const PredictionReport& report) {
  std::ostringstream out;
  out << "samples   " << report.size() << "\n";
  if (auto acc = report.accuracy()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f (%zu/%zu)", *acc, report.correct, report.labelled);
    out << "accuracy  " << buf << "\n";
    out << "confusion (rows = true class, columns = predicted)\n";
    out << "       ";
    for (std::size_t j = 0; j < report.confusion.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%8zu", j);
      out << buf;
    }
    out << "\n";
    for (std::size_t i = 0; i < report.confusion.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%6zu ", i);
      out << buf;
      for (std::size_t v : report.confusion[i]) {
        std::snprintf(buf, sizeof buf, "%8zu", v);
        out << buf;
      }
      out << "\n";
    }
  } else {
    out << "accuracy  n/a (no labels)\n";
  }
  return out.str();
}

}  // namespace gbrtl
