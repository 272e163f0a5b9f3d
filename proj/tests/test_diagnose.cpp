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
#include "detbound/diagnose.hpp"

#include <chrono>

#include <gtest/gtest.h>

#include "detbound/error.hpp"
#include "detbound/eval.hpp"
#include "support/oracle.hpp"
#include "support/synth.hpp"

namespace detbound {
namespace {

// Running scenario: one image, one category, three targets, four detections.
struct Scenario {
  Dataset ds;
  std::vector<Detection> dets;
};

Scenario running_scenario() {
  Scenario s;
  s.ds.images = {{1, 200, 200, ""}};
  s.ds.categories = {{1, "obj"}};
  s.ds.annotations = {{1, 1, 1, {0, 0, 10, 10}, 100, SizeClass::Small},
                      {2, 1, 1, {50, 50, 10, 10}, 100, SizeClass::Small},
                      {3, 1, 1, {100, 100, 10, 10}, 100, SizeClass::Small}};
  validate_dataset(s.ds);
  s.dets = {{1, 1, {0, 0, 10, 10}, 0.9},
            {1, 1, {2, 0, 10, 10}, 0.8},
            {1, 1, {50, 57, 10, 10}, 0.7},
            {1, 1, {90, 90, 5, 5}, 0.6}};
  return s;
}

TEST(LabelErrors, RunningScenario) {
  const auto s = running_scenario();
  const auto l = label_errors(s.dets, s.ds.annotations);
  EXPECT_EQ(l.detections[0], DetectionLabel::TruePositive);
  EXPECT_EQ(l.detections[1], DetectionLabel::Duplicate);
  EXPECT_EQ(l.detections[2], DetectionLabel::Mislocalized);
  EXPECT_EQ(l.detections[3], DetectionLabel::BackgroundError);
  EXPECT_EQ(l.target_of[2], 1u);
  EXPECT_EQ(l.targets[0], TargetLabel::Matched);
  // G2 has an unmatched detection at 30/170 > 0.1 nearby.
  EXPECT_EQ(l.targets[1], TargetLabel::Matched);
  EXPECT_EQ(l.targets[2], TargetLabel::Missed);
}

TEST(LabelErrors, BoundaryValues) {
  // Exactly 0.1 is background; exactly 0.5 on a free target is a match.
  const std::vector<GroundTruth> g{{1, 1, 1, {0, 0, 10, 10}, 100, SizeClass::Small}};
  const std::vector<Detection> half{{1, 1, {0, 0, 10, 5}, 0.9}};
  EXPECT_EQ(iou(half[0].bbox, g[0].bbox), 0.5);
  EXPECT_EQ(label_errors(half, g).detections[0], DetectionLabel::TruePositive);

  const std::vector<Detection> two_half{{1, 1, {0, 0, 10, 10}, 0.9}, {1, 1, {0, 0, 10, 5}, 0.8}};
  EXPECT_EQ(label_errors(two_half, g).detections[1], DetectionLabel::Duplicate);

  const std::vector<Detection> tenth{{1, 1, {0, 0, 10, 1}, 0.9}};
  EXPECT_EQ(iou(tenth[0].bbox, g[0].bbox), 0.1);
  EXPECT_EQ(label_errors(tenth, g).detections[0], DetectionLabel::BackgroundError);
}

TEST(LabelErrors, NoTargetsAllBackground) {
  const std::vector<Detection> d{{1, 1, {0, 0, 10, 10}, 0.9}};
  const auto l = label_errors(d, {});
  EXPECT_EQ(l.detections[0], DetectionLabel::BackgroundError);
}

TEST(StagePipeline, RunningScenarioStages) {
  const auto s = running_scenario();
  StagePipeline p(s.dets, s.ds.annotations);

  p.apply(Stage::RemoveBackground);
  ASSERT_EQ(p.detections().size(), 3u);
  EXPECT_EQ(p.detections()[2].bbox, (BBox{50, 57, 10, 10}));

  p.apply(Stage::FixLocalization);
  EXPECT_EQ(p.detections()[2].bbox, (BBox{50, 50, 10, 10}));
  EXPECT_EQ(p.detections()[2].score, 0.7);

  p.apply(Stage::RemoveDuplicates);
  ASSERT_EQ(p.detections().size(), 2u);
  EXPECT_EQ(p.detections()[1].bbox, (BBox{50, 50, 10, 10}));

  const auto before = p.apply(Stage::FixMisses);
  EXPECT_EQ(before.missed, 1u);
  ASSERT_EQ(p.detections().size(), 3u);
  EXPECT_EQ(p.detections()[2], (Detection{1, 1, {100, 100, 10, 10}, 1.0}));
}

TEST(StagePipeline, OutOfOrderRejectedAndReapplyIdempotent) {
  const auto s = running_scenario();
  StagePipeline p(s.dets, s.ds.annotations);
  EXPECT_THROW(p.apply(Stage::FixLocalization), PreconditionError);
  p.apply(Stage::RemoveBackground);
  const auto once = p.detections();
  p.apply(Stage::RemoveBackground);
  EXPECT_EQ(p.detections(), once);
  EXPECT_THROW(p.apply(Stage::RemoveDuplicates), PreconditionError);
  p.apply(Stage::FixLocalization);
  const auto fixed = p.detections();
  p.apply(Stage::FixLocalization);
  EXPECT_EQ(p.detections(), fixed);
  p.apply(Stage::RemoveDuplicates);
  p.apply(Stage::FixMisses);
  const auto done = p.detections();
  p.apply(Stage::FixMisses);
  EXPECT_EQ(p.detections(), done);
  EXPECT_THROW(p.apply(Stage::RemoveBackground), PreconditionError);
}

TEST(StagePipeline, ApplyStagesThrough) {
  const auto s = running_scenario();
  EXPECT_EQ(apply_stages_through(Stage::RemoveBackground, s.dets, s.ds.annotations).size(), 3u);
  EXPECT_EQ(apply_stages_through(Stage::FixMisses, s.dets, s.ds.annotations).size(), 3u);
}

TEST(Diagnose, RunningScenarioSequence) {
  const auto s = running_scenario();
  const auto r = diagnose(s.ds, s.dets);
  const auto seq = r.sequence();
  // Each entry checked against the reference evaluator on that stage's detections.
  const std::vector<std::vector<Detection>> stage_sets{
      s.dets,
      apply_stages_through(Stage::RemoveBackground, s.dets, s.ds.annotations),
      apply_stages_through(Stage::FixLocalization, s.dets, s.ds.annotations),
      apply_stages_through(Stage::RemoveDuplicates, s.dets, s.ds.annotations),
      apply_stages_through(Stage::FixMisses, s.dets, s.ds.annotations)};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto ref = testing::reference_evaluate(s.ds, stage_sets[i], default_iou_thresholds());
    EXPECT_NEAR(*seq[i], *ref.map, 1e-9) << kDiagnosisColumns[i];
  }
  EXPECT_NEAR(*seq[0], 3400.0 / 101.0, 1e-9);
  // The background detection ranks last, so dropping it leaves AP unchanged.
  EXPECT_EQ(*seq[1], *seq[0]);
  EXPECT_NEAR(*seq[2], 5600.0 / 101.0, 1e-9);
  EXPECT_NEAR(*seq[3], 6700.0 / 101.0, 1e-9);
  EXPECT_EQ(*seq[4], 100.0);
}

// A loose true positive outranks a mislocalized box. Snapping the latter onto
// the target makes it the match at strict thresholds; dropping it as a
// duplicate then lowers AP at IOU >= 0.65.
TEST(Diagnose, DuplicateRemovalCanLowerStrictThresholds) {
  Dataset ds;
  ds.images = {{1, 200, 200, ""}};
  ds.categories = {{1, "obj"}};
  ds.annotations = {{1, 1, 1, {0, 0, 100, 100}, 10000, SizeClass::Large}};
  validate_dataset(ds);
  const std::vector<Detection> dets{{1, 1, {0, 0, 100, 62}, 0.9}, {1, 1, {0, 0, 100, 38}, 0.8}};
  const auto seq = diagnose(ds, dets).sequence();
  const std::vector<std::vector<Detection>> stage_sets{
      dets,
      apply_stages_through(Stage::RemoveBackground, dets, ds.annotations),
      apply_stages_through(Stage::FixLocalization, dets, ds.annotations),
      apply_stages_through(Stage::RemoveDuplicates, dets, ds.annotations),
      apply_stages_through(Stage::FixMisses, dets, ds.annotations)};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto ref = testing::reference_evaluate(ds, stage_sets[i], default_iou_thresholds());
    EXPECT_NEAR(*seq[i], *ref.map, 1e-9) << kDiagnosisColumns[i];
  }
  EXPECT_NEAR(*seq[0], 30.0, 1e-9);
  EXPECT_NEAR(*seq[1], 30.0, 1e-9);
  EXPECT_NEAR(*seq[2], 65.0, 1e-9);
  EXPECT_NEAR(*seq[3], 30.0, 1e-9);
  EXPECT_EQ(*seq[4], 100.0);
}

TEST(Diagnose, PerfectAndEmptyDetections) {
  const auto ds = testing::make_synthetic_dataset(4, {.images = 20, .categories = 4, .boxes = 70});
  std::vector<Detection> perfect;
  for (const auto& g : ds.annotations) perfect.push_back({g.image_id, g.category_id, g.bbox, 0.9});
  for (const auto& v : diagnose(ds, perfect).sequence()) EXPECT_EQ(*v, 100.0);

  const auto empty = diagnose(ds, {}).sequence();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(*empty[i], 0.0);
  EXPECT_EQ(*empty[4], 100.0);
}

TEST(Diagnose, CountsPartitionDetections) {
  const auto ds = testing::make_synthetic_dataset(5, {.images = 30, .categories = 5, .boxes = 120});
  const auto dets = testing::simulate_detections(ds, {}, 6);
  const auto r = diagnose(ds, dets);
  LabelCounts first;
  for (const auto& c : r.counts) {
    if (c.stage == Stage::RemoveBackground) first += c.counts;
  }
  EXPECT_EQ(first.true_positive + first.background + first.mislocalized + first.duplicate,
            dets.size());
  EXPECT_EQ(r.counts.size(), 4 * ds.categories.size());
}

TEST(Diagnose, ConfigValidation) {
  DiagnoseConfig cfg;
  cfg.t_bg = 0.6;
  EXPECT_THROW(cfg.validate(), PreconditionError);
  cfg = {};
  cfg.miss_score = 2.0;
  EXPECT_THROW(cfg.validate(), PreconditionError);
}

TEST(DiagnoseProperty, MonotoneAndTerminalOnRandomSets) {
  const auto ds = testing::make_synthetic_dataset(77, {.images = 40, .categories = 5, .boxes = 180});
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto dets = testing::simulate_detections(ds, testing::random_profile(seed), seed + 500);
    const auto seq = diagnose(ds, dets).sequence();
    for (std::size_t i = 1; i < seq.size(); ++i) {
      EXPECT_GE(*seq[i], *seq[i - 1]) << "seed " << seed << " stage " << i;
    }
    EXPECT_NEAR(*seq[4], 100.0, 1e-9) << "seed " << seed;
  }
}

TEST(DiagnoseProperty, ParallelMatchesSequential) {
  const auto ds = testing::make_synthetic_dataset(78, {.images = 30, .categories = 4, .boxes = 120});
  const auto dets = testing::simulate_detections(ds, {}, 79);
  EvalConfig par;
  par.threads = 3;
  const auto a = diagnose(ds, dets);
  const auto b = diagnose(ds, dets, par);
  EXPECT_EQ(a.sequence(), b.sequence());
}

}  // namespace
}  // namespace detbound
