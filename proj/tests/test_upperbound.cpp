// Copyright 2026 The detbound Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "detbound/upperbound.hpp"

#include <gtest/gtest.h>

#include "detbound/error.hpp"
#include "detbound/random.hpp"
#include "support/oracle.hpp"
#include "support/synth.hpp"

namespace detbound {
namespace {

// Two images, two categories, three targets.
Dataset tiny() {
  Dataset ds;
  ds.images = {{1, 200, 200, ""}, {2, 200, 200, ""}};
  ds.categories = {{1, "a"}, {2, "b"}};
  ds.annotations = {{1, 1, 1, {0, 0, 20, 20}, 400, SizeClass::Small},
                    {2, 1, 1, {100, 100, 50, 50}, 2500, SizeClass::Small},
                    {3, 2, 2, {10, 10, 150, 150}, 22500, SizeClass::Small}};
  validate_dataset(ds);
  return ds;
}

ClassifierOutput out(AnnotationId id, CategoryId label, double conf) {
  return {id, {label, conf}, {}};
}

TEST(DetectionsFromLabels, OneDetectionPerTarget) {
  const auto ds = tiny();
  const std::vector<ClassifierOutput> o{out(3, 1, 0.4), out(1, 1, 0.9), out(2, 2, 0.3)};
  const auto d = detections_from_labels(ds, o);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0], (Detection{1, 1, {0, 0, 20, 20}, 0.9}));
  EXPECT_EQ(d[1], (Detection{1, 2, {100, 100, 50, 50}, 0.3}));
  EXPECT_EQ(d[2], (Detection{2, 1, {10, 10, 150, 150}, 0.4}));
  const auto c = detections_from_labels(ds, o, {.constant_confidence = true});
  for (const auto& x : c) EXPECT_EQ(x.score, 1.0);
}

TEST(DetectionsFromLabels, MissingOutputsListed) {
  const auto ds = tiny();
  const std::vector<ClassifierOutput> o{out(2, 1, 0.9)};
  try {
    detections_from_labels(ds, o);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1, 3"), std::string::npos) << msg;
  }
}

TEST(Strategy1, PerfectClassifierGivesHundredEverywhere) {
  const auto ds = testing::make_synthetic_dataset(1, {.images = 30, .categories = 5, .boxes = 150});
  const auto r = uap_strategy1(ds, testing::simulate_classifier(ds, 1.0, 2));
  EXPECT_EQ(*r.map, 100.0);
  EXPECT_EQ(*r.ap50, 100.0);
  EXPECT_EQ(*r.ap75, 100.0);
  for (const auto& c : r.categories) {
    if (c.n_gt == 0) continue;
    EXPECT_EQ(*c.ap, 100.0);
    for (const auto& v : c.ap_per_iou) EXPECT_EQ(*v, 100.0);
  }
}

TEST(Strategy1, OneMislabeledOfTwoTargets) {
  const auto ds = tiny();
  const std::vector<ClassifierOutput> o{out(1, 1, 1.0), out(2, 2, 1.0), out(3, 2, 1.0)};
  const auto r = uap_strategy1(ds, o);
  // Category 1: one TP over two targets. Brute-force AP on the induced curve.
  const auto expect = *testing::reference_ap101({true}, 2) * 100.0;
  EXPECT_EQ(expect, 5100.0 / 101.0);
  EXPECT_NEAR(*r.categories[0].ap50, expect, 1e-12);
  EXPECT_NEAR(*r.categories[0].ap, expect, 1e-12);
}

TEST(Strategy1Property, IdenticalAcrossIouThresholds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ds = testing::make_synthetic_dataset(seed);
    const auto r = uap_strategy1(ds, testing::simulate_classifier(ds, 0.9, seed + 100));
    EXPECT_EQ(*r.ap50, *r.ap75);
    EXPECT_EQ(*r.ap50, *r.map);
    for (const auto& c : r.categories) {
      for (const auto& v : c.ap_per_iou) EXPECT_EQ(v, c.ap_per_iou.front());
    }
  }
}

TEST(Strategy1Property, TranslationInvariant) {
  auto ds = testing::make_synthetic_dataset(7, {.images = 20, .categories = 4, .boxes = 80});
  const auto outs = testing::simulate_classifier(ds, 0.8, 8);
  const auto base = uap_strategy1(ds, outs);
  for (auto& g : ds.annotations) {
    g.bbox.x += 13.25;
    g.bbox.y -= 7.5;
  }
  EXPECT_EQ(uap_strategy1(ds, outs), base);
}

TEST(Strategy1Property, CorrectingALabelNeverLowersAnyCategory) {
  const auto ds = testing::make_synthetic_dataset(9, {.images = 25, .categories = 4, .boxes = 100});
  auto outs = testing::simulate_classifier(ds, 0.7, 10);
  auto before = uap_strategy1(ds, outs);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto truth = ds.find_annotation(outs[i].annotation_id)->category_id;
    if (outs[i].prediction.label == truth) continue;
    outs[i].prediction.label = truth;
    const auto after = uap_strategy1(ds, outs);
    for (std::size_t k = 0; k < after.categories.size(); ++k) {
      if (!before.categories[k].ap) continue;
      EXPECT_GE(*after.categories[k].ap, *before.categories[k].ap);
    }
    before = after;
  }
}

TEST(Aggregate, Examples) {
  const std::vector<LabelScore> single{{1, 0.9}};
  EXPECT_EQ(aggregate_neighborhood(single, AggregationMode::MostFrequentLabel), (LabelScore{1, 0.9}));
  EXPECT_EQ(aggregate_neighborhood(single, AggregationMode::MostConfidentBox), (LabelScore{1, 0.9}));
  const std::vector<LabelScore> l{{1, 0.9}, {1, 0.8}, {2, 0.95}, {1, 0.7}};
  EXPECT_EQ(aggregate_neighborhood(l, AggregationMode::MostFrequentLabel), (LabelScore{1, 0.9}));
  EXPECT_EQ(aggregate_neighborhood(l, AggregationMode::MostConfidentBox), (LabelScore{2, 0.95}));
  EXPECT_THROW(aggregate_neighborhood({}, AggregationMode::MostConfidentBox), PreconditionError);
}

TEST(Aggregate, FrequencyTiesBreakByConfidenceThenId) {
  const std::vector<LabelScore> by_conf{{3, 0.5}, {2, 0.9}, {3, 0.6}, {2, 0.1}};
  EXPECT_EQ(aggregate_neighborhood(by_conf, AggregationMode::MostFrequentLabel), (LabelScore{2, 0.9}));
  const std::vector<LabelScore> by_id{{5, 0.7}, {4, 0.7}};
  EXPECT_EQ(aggregate_neighborhood(by_id, AggregationMode::MostFrequentLabel), (LabelScore{4, 0.7}));
}

TEST(Aggregate, ParseMode) {
  EXPECT_EQ(parse_aggregation_mode("most_frequent_label"), AggregationMode::MostFrequentLabel);
  EXPECT_EQ(to_string(AggregationMode::MostConfidentBox), "most_confident_box");
  EXPECT_THROW(parse_aggregation_mode("vote"), PreconditionError);
}

TEST(Strategy2, EmptyNeighborhoodsEqualStrategy1) {
  const auto ds = testing::make_synthetic_dataset(11, {.images = 20, .categories = 4, .boxes = 80});
  const auto outs = testing::simulate_classifier(ds, 0.8, 12);
  for (auto mode : {AggregationMode::MostConfidentBox, AggregationMode::MostFrequentLabel}) {
    EXPECT_EQ(uap_strategy2(ds, outs, mode), uap_strategy1(ds, outs));
    EXPECT_EQ(uap_strategy2(ds, outs, mode, {}, {.neighbors_only = true}), uap_strategy1(ds, outs));
  }
}

TEST(Strategy2, AgreeingNeighborsEqualStrategy1) {
  const auto ds = testing::make_synthetic_dataset(13, {.images = 20, .categories = 4, .boxes = 80});
  auto outs = testing::simulate_classifier(ds, 0.8, 14);
  for (auto& o : outs) {
    for (int k = 0; k < 4; ++k) {
      o.neighbors.push_back({BBox{1, 1, 5, 5},
                             {o.prediction.label, o.prediction.confidence * 0.5}});
    }
  }
  for (auto mode : {AggregationMode::MostConfidentBox, AggregationMode::MostFrequentLabel}) {
    EXPECT_EQ(uap_strategy2(ds, outs, mode), uap_strategy1(ds, outs));
  }
}

TEST(Strategy2, ModalNeighborsCorrectWrongSelfLabel) {
  const auto ds = tiny();
  // Target 2 (category 1) is self-labeled 2, its neighbors mostly say 1.
  std::vector<ClassifierOutput> o{out(1, 1, 0.9), out(2, 2, 0.8), out(3, 2, 0.7)};
  o[1].neighbors = {{{101, 100, 50, 50}, {1, 0.6}},
                    {{99, 101, 50, 50}, {1, 0.5}},
                    {{101, 99, 50, 50}, {1, 0.45}},
                    {{100, 99, 50, 50}, {2, 0.4}}};
  const auto s1 = uap_strategy1(ds, o);
  const auto s2 = uap_strategy2(ds, o, AggregationMode::MostFrequentLabel);

  // Oracle on the relabeled detections.
  const auto relabeled = aggregate_outputs(o, AggregationMode::MostFrequentLabel);
  EXPECT_EQ(relabeled[1].prediction, (LabelScore{1, 0.6}));
  const auto ref = testing::reference_evaluate(ds, detections_from_labels(ds, relabeled),
                                               default_iou_thresholds());
  EXPECT_NEAR(*s2.categories[0].ap, *ref.ap[0][0], 1e-9);
  EXPECT_GT(*s2.categories[0].ap, *s1.categories[0].ap);
  EXPECT_EQ(*s2.categories[0].ap, 100.0);
}

TEST(Strategy2, NeighborsOnlyDropsOwnPrediction) {
  std::vector<ClassifierOutput> o{out(1, 1, 0.99)};
  o[0].neighbors = {{{0, 0, 1, 1}, {2, 0.5}}};
  EXPECT_EQ(aggregate_outputs(o, AggregationMode::MostConfidentBox)[0].prediction,
            (LabelScore{1, 0.99}));
  EXPECT_EQ(aggregate_outputs(o, AggregationMode::MostConfidentBox, true)[0].prediction,
            (LabelScore{2, 0.5}));
}

TEST(Correlate, HandCases) {
  const std::vector<AccuracyUapPoint> three{{0, 0}, {1, 1}, {2, 1}};
  const auto f = correlate_accuracy_uap(three);
  EXPECT_NEAR(f.slope, 0.5, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 0.75, 1e-12);

  const std::vector<AccuracyUapPoint> line{{0.1, 0.2}, {0.4, 0.8}, {0.7, 1.4}, {0.9, 1.8}};
  const auto l = correlate_accuracy_uap(line);
  EXPECT_NEAR(l.slope, 2.0, 1e-12);
  EXPECT_NEAR(l.r_squared, 1.0, 1e-12);

  const std::vector<AccuracyUapPoint> flat{{0.1, 0.5}, {0.4, 0.5}, {0.9, 0.5}};
  const auto c = correlate_accuracy_uap(flat);
  EXPECT_EQ(c.slope, 0.0);
  EXPECT_EQ(c.r_squared, 0.0);

  const std::vector<AccuracyUapPoint> one{{0.5, 0.5}};
  EXPECT_THROW(correlate_accuracy_uap(one), PreconditionError);
  const std::vector<AccuracyUapPoint> vertical{{0.5, 0.1}, {0.5, 0.9}};
  EXPECT_THROW(correlate_accuracy_uap(vertical), PreconditionError);
}

TEST(ClassifierAccuracy, FractionCorrect) {
  const auto ds = tiny();
  const std::vector<ClassifierOutput> o{out(1, 1, 0.9), out(2, 2, 0.8), out(3, 2, 0.7)};
  EXPECT_NEAR(classifier_accuracy(ds, o), 2.0 / 3.0, 1e-15);
  const auto synth = testing::make_synthetic_dataset(3);
  EXPECT_NEAR(classifier_accuracy(synth, testing::simulate_classifier(synth, 0.9, 4)), 0.9, 0.05);
}

}  // namespace
}  // namespace detbound
