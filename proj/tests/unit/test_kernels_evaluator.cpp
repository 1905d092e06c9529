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

#include "gbrtl/evaluator.hpp"
#include "gbrtl/kernels/batch_predict.hpp"
#include "random_model.hpp"
#include "test_util.hpp"

namespace gbrtl {
namespace {

using kernels::FlatEnsemble;
using kernels::Isa;

std::vector<std::int64_t> reference(const QuantizedEnsemble& q, const std::vector<QValue>& rows, std::size_t n) {
  std::vector<std::int64_t> out;
  const auto F = static_cast<std::size_t>(q.num_features);
  for (std::size_t r = 0; r < n; ++r) {
    const auto p = predict_quantized(q, std::span(rows).subspan(r * F, F));
    out.insert(out.end(), p.qf.begin(), p.qf.end());
  }
  return out;
}

std::vector<std::int64_t> run(const QuantizedEnsemble& q, const std::vector<QValue>& rows, std::size_t n, Isa isa) {
  std::vector<std::int64_t> out(n * static_cast<std::size_t>(q.num_groups()));
  kernels::predict_batch(FlatEnsemble::from(q), rows, n, out, isa);
  return out;
}

TEST(BatchKernels, ScalarAndVectorMatchReference) {
  std::mt19937_64 rng(707);
  for (int i = 0; i < 60; ++i) {
    const auto spec = testing::random_spec(rng);
    const QuantizedEnsemble q = quantize_leaves(integerize_thresholds(testing::random_ensemble(spec, rng)),
                                                spec.w_feature, std::uniform_int_distribution<int>(1, 12)(rng));
    // Row counts around the vector width exercise the remainder path.
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 37)(rng);
    std::vector<QValue> rows;
    for (std::size_t r = 0; r < n; ++r) {
      const auto x = testing::random_input(spec.num_features, spec.w_feature, rng);
      rows.insert(rows.end(), x.begin(), x.end());
    }
    const auto want = reference(q, rows, n);
    EXPECT_EQ(run(q, rows, n, Isa::kScalar), want);
    EXPECT_EQ(run(q, rows, n, Isa::kAvx2), want);
    EXPECT_EQ(run(q, rows, n, kernels::best_isa()), want);
  }
}

TEST(BatchKernels, WideModelsFallBackToScalar) {
  std::mt19937_64 rng(808);
  testing::RandomModelSpec spec;
  spec.trees_per_group = 4;
  QuantizedEnsemble q = quantize_leaves(integerize_thresholds(testing::random_ensemble(spec, rng)), spec.w_feature, 32);
  const FlatEnsemble flat = FlatEnsemble::from(q);
  EXPECT_FALSE(flat.fits_int32);
  std::vector<QValue> rows;
  for (int r = 0; r < 20; ++r) {
    const auto x = testing::random_input(spec.num_features, spec.w_feature, rng);
    rows.insert(rows.end(), x.begin(), x.end());
  }
  EXPECT_EQ(run(q, rows, 20, Isa::kAvx2), reference(q, rows, 20));
}

TEST(BatchKernels, IsaNames) {
  EXPECT_STREQ(kernels::to_string(Isa::kScalar), "scalar");
  EXPECT_TRUE(kernels::isa_supported(Isa::kScalar));
  EXPECT_TRUE(kernels::isa_supported(kernels::best_isa()));
}

TEST(Evaluator, DatasetReportAndConfusion) {
  const QuantizedEnsemble q =
      quantize_binary(integerize_thresholds(load_model_file(testing::fixture_path("example_model.json"))), 4, 3);
  const FeatureQuantizer fq = load_quantizer_file(testing::fixture_path("example_quantizer.json"));
  // Codes equal raw values for this quantizer.
  const Dataset d = parse_csv("2,15,4,1,5,0\n0,0,0,0,0,1\n0,9,0,5,0,1\n", LabelColumn::kLast);
  const PredictionReport r = evaluate_dataset(q, fq, d);
  // Row 2: tree1 x0<1, x1<8 -> 7; tree2 x3<2, x0<3 -> 3; QF = -5 + 10 = 5
  // Row 3: tree1 x0<1, x1>=8 -> 2; tree2 x3>=2, x2<3 -> 0; QF = -3
  EXPECT_EQ(r.qf, (std::vector<std::int64_t>{-2, 5, -3}));
  EXPECT_EQ(r.predicted, (std::vector<int>{0, 1, 0}));
  ASSERT_TRUE(r.accuracy());
  EXPECT_DOUBLE_EQ(*r.accuracy(), 2.0 / 3.0);
  EXPECT_EQ(r.confusion, (std::vector<std::vector<std::size_t>>{{1, 0}, {1, 1}}));
  EXPECT_NE(format_table(r).find("accuracy  0.6667 (2/3)"), std::string::npos);
  EXPECT_NE(to_json(r).find("\"accuracy\""), std::string::npos);

  const Dataset bad = parse_csv("2,15,4,1,5,3\n", LabelColumn::kLast);
  EXPECT_GBRTL_ERROR(evaluate_dataset(q, fq, bad), ErrorKind::kData, "row 1");
}

TEST(Evaluator, MergeIsConcatenation) {
  const QuantizedEnsemble q =
      quantize_binary(integerize_thresholds(load_model_file(testing::fixture_path("example_model.json"))), 4, 3);
  const FeatureQuantizer fq = load_quantizer_file(testing::fixture_path("example_quantizer.json"));
  const std::string a = "2,15,4,1,5,0\n", b = "0,0,0,0,0,1\n", c = "0,9,0,5,0,1\n";
  auto eval = [&](const std::string& csv) { return evaluate_dataset(q, fq, parse_csv(csv, LabelColumn::kLast)); };
  PredictionReport left = eval(a);
  left.merge(eval(b));
  left.merge(eval(c));
  PredictionReport right = eval(b);
  right.merge(eval(c));
  PredictionReport joined = eval(a);
  joined.merge(right);
  const PredictionReport whole = eval(a + b + c);
  EXPECT_EQ(to_json(left), to_json(whole));
  EXPECT_EQ(to_json(joined), to_json(whole));
}

}  // namespace
}  // namespace gbrtl
