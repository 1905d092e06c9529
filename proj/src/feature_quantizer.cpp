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
#include "gbrtl/feature_quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "gbrtl/error.hpp"
#include "json.hpp"

namespace gbrtl {

void validate(const FeatureQuantizer& q) {
  if (q.w_feature < 1 || q.w_feature > FeatureQuantizer::kMaxBits) {
    fail(ErrorKind::kConfig, "w_feature must be in [1, " + std::to_string(FeatureQuantizer::kMaxBits) + "], got " +
                                 std::to_string(q.w_feature));
  }
  if (q.mins.size() != q.maxs.size()) fail(ErrorKind::kValidation, "quantizer mins/maxs length mismatch");
  for (std::size_t f = 0; f < q.mins.size(); ++f) {
    if (!std::isfinite(q.mins[f]) || !std::isfinite(q.maxs[f])) {
      fail(ErrorKind::kValidation, "quantizer feature " + std::to_string(f) + " has a non-finite bound");
    }
    if (q.mins[f] > q.maxs[f]) fail(ErrorKind::kValidation, "quantizer feature " + std::to_string(f) + " has min > max");
  }
}

FeatureQuantizer fit_quantizer(const Dataset& data, int w_feature) {
  if (data.rows == 0 || data.cols == 0) fail(ErrorKind::kData, "cannot fit a quantizer on an empty dataset");
  FeatureQuantizer q;
  q.w_feature = w_feature;
  q.mins.assign(data.cols, 0.0);
  q.maxs.assign(data.cols, 0.0);
  for (std::size_t r = 0; r < data.rows; ++r) {
    auto row = data.row(r);
    for (std::size_t c = 0; c < data.cols; ++c) {
      double v = row[c];
      if (!std::isfinite(v)) {
        fail(ErrorKind::kData, "non-finite value at row " + std::to_string(r) + ", column " + std::to_string(c));
      }
      if (r == 0) {
        q.mins[c] = q.maxs[c] = v;
      } else {
        q.mins[c] = std::min(q.mins[c], v);
        q.maxs[c] = std::max(q.maxs[c], v);
      }
    }
  }
  validate(q);
  return q;
}

std::vector<QValue> transform(const FeatureQuantizer& q, std::span<const double> x) {
  if (x.size() != q.mins.size()) {
    fail(ErrorKind::kContract, "expected " + std::to_string(q.mins.size()) + " features, got " + std::to_string(x.size()));
  }
  const double top = static_cast<double>(q.max_code());
  std::vector<QValue> out(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) {
    const double range = q.maxs[f] - q.mins[f];
    if (!(range > 0.0)) {
      out[f] = 0;
      continue;
    }
    double norm = (x[f] - q.mins[f]) / range;
    // NaN compares false both ways and lands on 0.
    norm = norm > 1.0 ? 1.0 : (norm >= 0.0 ? norm : 0.0);
    out[f] = static_cast<QValue>(std::round(norm * top));
  }
  return out;
}

std::vector<QValue> transform_dataset(const FeatureQuantizer& q, const Dataset& data) {
  if (data.cols != q.mins.size()) {
    fail(ErrorKind::kData, "dataset has " + std::to_string(data.cols) + " feature columns, quantizer expects " +
                               std::to_string(q.mins.size()));
  }
  std::vector<QValue> out;
  out.reserve(data.rows * data.cols);
  for (std::size_t r = 0; r < data.rows; ++r) {
    auto row = transform(q, data.row(r));
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

GbdtEnsemble integerize_thresholds(const GbdtEnsemble& ensemble) {
  GbdtEnsemble out = ensemble;
  for (auto& tree : out.trees)
    for (auto& node : tree.nodes)
      if (!node.is_leaf()) node.threshold = std::ceil(node.threshold);
  return out;
}

std::string to_json(const FeatureQuantizer& q) {
  nlohmann::ordered_json doc;
  doc["w_feature"] = q.w_feature;
  doc["mins"] = q.mins;
  doc["maxs"] = q.maxs;
  return doc.dump(1) + "\n";
}

FeatureQuantizer parse_quantizer_json(std::string_view text) {
  FeatureQuantizer q;
  try {
    auto doc = nlohmann::json::parse(text.begin(), text.end());
    q.w_feature = doc.at("w_feature").get<int>();
    q.mins = doc.at("mins").get<std::vector<double>>();
    q.maxs = doc.at("maxs").get<std::vector<double>>();
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kParse, "malformed quantizer JSON at byte " + std::to_string(e.byte));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("quantizer JSON: ") + e.what());
  }
  validate(q);
  return q;
}

FeatureQuantizer load_quantizer_file(const std::string& path) {
  std::string text = read_text_file(path);
  try {
    return parse_quantizer_json(text);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

}  // namespace gbrtl
