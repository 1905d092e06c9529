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

#include <cmath>

#include "gbrtl/ensemble.hpp"
#include "gbrtl/io.hpp"
#include "json.hpp"
#include "random_model.hpp"
#include "test_util.hpp"

namespace gbrtl {
namespace {

using testing::fixture_path;

GbdtEnsemble example_model() { return load_model_file(fixture_path("example_model.json")); }

TEST(FloatEvaluator, WorkedExampleMarginAndClass) {
  const GbdtEnsemble e = example_model();
  const std::vector<double> x = {2, 15, 4, 1, 5};
  // tree 1: x0 >= 1 -> x2 >= 3 -> -0.7; tree 2: x3 < 2 -> x0 < 3 -> -0.4
  EXPECT_NEAR(evaluate_tree(e.trees[0], x), -0.7, 1e-12);
  EXPECT_NEAR(evaluate_tree(e.trees[1], x), -0.4, 1e-12);
  const auto margin = predict_margin(e, x);
  ASSERT_EQ(margin.size(), 1u);
  EXPECT_NEAR(margin[0], -1.1, 1e-9);
  EXPECT_EQ(predict_class_float(e, x), 0);
}

TEST(FloatEvaluator, BranchRuleIsStrictLess) {
  const GbdtEnsemble e = example_model();
  // x0 == 1 is not < 1, so tree 1 goes right.
  EXPECT_NEAR(evaluate_tree(e.trees[0], std::vector<double>{1, 0, 0, 0, 0}), 0.5, 1e-12);
  EXPECT_NEAR(evaluate_tree(e.trees[0], std::vector<double>{0.999, 0, 0, 0, 0}), 2.0, 1e-12);
}

TEST(FloatEvaluator, DecideClassTiesGoToLowestClass) {
  EXPECT_EQ(decide_class(std::vector<double>{0.0}, TaskKind::kBinaryLogistic), 1);
  EXPECT_EQ(decide_class(std::vector<double>{-1e-12}, TaskKind::kBinaryLogistic), 0);
  EXPECT_EQ(decide_class(std::vector<double>{1.0, 3.0, 3.0}, TaskKind::kMulticlassSoftmax), 1);
}

TEST(FloatEvaluator, WrongInputLengthIsContractError) {
  EXPECT_GBRTL_ERROR(predict_margin(example_model(), std::vector<double>{1, 2}), ErrorKind::kContract, "");
}

std::vector<std::vector<double>> read_rows(const std::string& name) {
  const Dataset d = read_csv(fixture_path(name), LabelColumn::kNone);
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < d.rows; ++r) rows.emplace_back(d.row(r).begin(), d.row(r).end());
  return rows;
}

void expect_margins_match(const std::string& prefix) {
  const GbdtEnsemble e = load_model_file(fixture_path(prefix + "_xgb.json"));
  const auto codes = read_rows(prefix + "_codes.csv");
  const auto margins = read_rows(prefix + "_margins.csv");
  ASSERT_EQ(codes.size(), margins.size());
  for (std::size_t r = 0; r < codes.size(); ++r) {
    const auto got = predict_margin(e, codes[r]);
    ASSERT_EQ(got.size(), margins[r].size());
    for (std::size_t g = 0; g < got.size(); ++g) EXPECT_NEAR(got[g], margins[r][g], 1e-5) << "row " << r;
  }
}

TEST(XgboostLoader, BinaryMarginsMatchReference) { expect_margins_match("binary"); }
TEST(XgboostLoader, MulticlassMarginsMatchReference) { expect_margins_match("multiclass"); }

TEST(XgboostLoader, MulticlassRoundRobinLayout) {
  const LoadedModel m = load_xgboost_model(read_text_file(fixture_path("multiclass_xgb.json")));
  EXPECT_EQ(m.ensemble.task, TaskKind::kMulticlassSoftmax);
  EXPECT_EQ(m.ensemble.num_classes, 3);
  EXPECT_EQ(m.ensemble.trees.size(), 6u);
  EXPECT_EQ(m.ensemble.trees_per_group(), 2u);
  EXPECT_EQ(m.ensemble.group_of(4), 1);
  EXPECT_EQ(m.report.objective, "multi:softprob");
  EXPECT_EQ(m.report.base_margin.size(), 3u);
}

TEST(XgboostLoader, BinaryBaseScoreIsLogit) {
  const LoadedModel m = load_xgboost_model(read_text_file(fixture_path("binary_xgb.json")));
  const auto doc = nlohmann::json::parse(read_text_file(fixture_path("binary_xgb.json")));
  const std::string bs = doc["learner"]["learner_model_param"]["base_score"];
  const double p = std::stod(bs.substr(bs.find_first_not_of('[')));
  EXPECT_NEAR(m.ensemble.base_margin[0], std::log(p / (1 - p)), 1e-12);
}

nlohmann::json binary_doc() { return nlohmann::json::parse(read_text_file(fixture_path("binary_xgb.json"))); }

TEST(XgboostLoader, RejectsUnsupportedInputs) {
  EXPECT_GBRTL_ERROR(load_xgboost_model("{\"learner\": "), ErrorKind::kParse, "byte");

  auto doc = binary_doc();
  doc["learner"]["objective"]["name"] = "reg:squarederror";
  EXPECT_GBRTL_ERROR(load_xgboost_model(doc.dump()), ErrorKind::kUnsupported, "unsupported objective");

  doc = binary_doc();
  doc["learner"]["gradient_booster"]["name"] = "gblinear";
  EXPECT_GBRTL_ERROR(load_xgboost_model(doc.dump()), ErrorKind::kUnsupported, "unsupported booster");

  doc = binary_doc();
  doc["learner"]["gradient_booster"]["model"]["trees"][0]["split_indices"][0] = 99;
  EXPECT_GBRTL_ERROR(load_xgboost_model(doc.dump()), ErrorKind::kValidation, "99");
}

TEST(Validation, CatchesStructuralErrors) {
  GbdtEnsemble e = example_model();
  e.trees[0].nodes[1].feature = 5;
  EXPECT_GBRTL_ERROR(validate(e), ErrorKind::kValidation, "feature index 5");

  e = example_model();
  e.trees[0].nodes[2].left = 3;  // node 3 now has two parents
  EXPECT_GBRTL_ERROR(validate(e), ErrorKind::kValidation, "two parents");

  e = example_model();
  e.trees[0].nodes.push_back(TreeNode::leaf(1.0));
  EXPECT_GBRTL_ERROR(validate(e), ErrorKind::kValidation, "unreachable");

  e = example_model();
  e.task = TaskKind::kMulticlassSoftmax;
  e.num_classes = 3;
  e.base_margin.assign(3, 0.0);
  EXPECT_GBRTL_ERROR(validate(e), ErrorKind::kValidation, "divisible");
}

TEST(CanonicalJson, RoundTripsRandomModels) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const GbdtEnsemble e = testing::random_ensemble(testing::random_spec(rng), rng);
    const std::string text = to_canonical_json(e);
    const GbdtEnsemble back = load_model_auto(text);
    EXPECT_EQ(to_canonical_json(back), text);
    EXPECT_EQ(back.trees.size(), e.trees.size());
    EXPECT_EQ(back.base_margin, e.base_margin);
  }
}

TEST(CanonicalJson, UnknownTaskIsUnsupported) {
  EXPECT_GBRTL_ERROR(parse_canonical_json(R"({"task":"regression","num_features":1,"f0":0,"trees":[]})"),
                     ErrorKind::kUnsupported, "regression");
}

}  // namespace
}  // namespace gbrtl
