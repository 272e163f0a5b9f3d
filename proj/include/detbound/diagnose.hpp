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
#pragma once

// Sequential error attribution. Every detection and target of an
// (image, category) pair gets an error label; error classes are then fixed
// one at a time (background confusions removed, mislocalized boxes snapped
// to their target, duplicates removed, misses added) and mAP is re-measured
// after each fix.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "detbound/data.hpp"
#include "detbound/eval.hpp"

namespace detbound {

struct DiagnoseConfig {
  double t_bg = 0.1;   // max IOU at or below this: background confusion
  double t_loc = 0.5;  // matching threshold for labeling
  double miss_score = 1.0;

  void validate() const;
};

enum class DetectionLabel { TruePositive, BackgroundError, Mislocalized, Duplicate };
enum class TargetLabel { Matched, Missed };

std::string_view to_string(DetectionLabel label);
std::string_view to_string(TargetLabel label);

struct ErrorLabels {
  // Indexed like the ranked detections passed to label_errors.
  std::vector<DetectionLabel> detections;
  // Matched target for true positives, highest-IOU target otherwise.
  std::vector<std::optional<std::size_t>> target_of;
  std::vector<TargetLabel> targets;
};

// `ranked_dets` and `gts` belong to a single (image, category) pair.
ErrorLabels label_errors(std::span<const Detection> ranked_dets,
                         std::span<const GroundTruth> gts,
                         const DiagnoseConfig& cfg = {});

enum class Stage : std::uint8_t {
  RemoveBackground,
  FixLocalization,
  RemoveDuplicates,
  FixMisses
};

inline constexpr std::array<Stage, 4> kAllStages = {
    Stage::RemoveBackground, Stage::FixLocalization, Stage::RemoveDuplicates,
    Stage::FixMisses};

std::string_view to_string(Stage stage);

struct LabelCounts {
  std::size_t true_positive = 0;
  std::size_t background = 0;
  std::size_t mislocalized = 0;
  std::size_t duplicate = 0;
  std::size_t missed = 0;

  LabelCounts& operator+=(const LabelCounts& o);
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

// Detections of one (image, category) pair moving through the four stages.
// Stages must be applied in order; re-applying the latest stage is allowed
// (and is a no-op), anything else throws PreconditionError.
class StagePipeline {
 public:
  // Detections in ingestion order; equal scores rank in this order.
  StagePipeline(std::vector<Detection> dets, std::vector<GroundTruth> gts,
                DiagnoseConfig cfg = {});

  // Explicit order keys: det_keys[i] for dets[i], miss_keys[j] for a
  // detection added for gts[j]. Keys order the combined detection list.
  StagePipeline(std::vector<Detection> dets, std::vector<std::uint64_t> det_keys,
                std::vector<GroundTruth> gts, std::vector<std::uint64_t> miss_keys,
                DiagnoseConfig cfg = {});

  // Labels of the current detections, in ingestion order.
  ErrorLabels current_labels() const;
  LabelCounts current_counts() const;

  // Applies `stage`; returns the label counts observed before the change.
  LabelCounts apply(Stage stage);

  std::optional<Stage> last_stage() const { return last_; }
  const std::vector<Detection>& detections() const { return dets_; }
  const std::vector<std::uint64_t>& keys() const { return keys_; }
  const std::vector<GroundTruth>& targets() const { return gts_; }

 private:
  std::vector<Detection> dets_;
  std::vector<std::uint64_t> keys_;
  std::vector<GroundTruth> gts_;
  std::vector<std::uint64_t> miss_keys_;
  DiagnoseConfig cfg_;
  std::optional<Stage> last_;
};

// Convenience form for a single pair: runs every stage up to and including
// `stage` from the start and returns the resulting detections.
std::vector<Detection> apply_stages_through(Stage stage,
                                            std::span<const Detection> dets,
                                            std::span<const GroundTruth> gts,
                                            const DiagnoseConfig& cfg = {});

struct CategoryStageCounts {
  CategoryId category_id = 0;
  Stage stage = Stage::RemoveBackground;
  LabelCounts counts;  // labels on the stage's input
};

struct DiagnosisReport {
  // x100 mAP over the evaluator's IOU grid; nullopt without any targets.
  std::optional<double> map_baseline;
  std::optional<double> map_after_cls_removal;
  std::optional<double> map_after_localization_fix;
  std::optional<double> map_after_duplicate_removal;
  std::optional<double> map_after_miss_fix;
  std::vector<CategoryStageCounts> counts;

  std::array<std::optional<double>, 5> sequence() const {
    return {map_baseline, map_after_cls_removal, map_after_localization_fix,
            map_after_duplicate_removal, map_after_miss_fix};
  }
};

// Column headers of the five-entry mAP row, in order.
inline constexpr std::array<std::string_view, 5> kDiagnosisColumns = {
    "mAP", "-Cls. (Type I)", "+Local.", "-Duplicates", "+Misses"};

DiagnosisReport diagnose(const Dataset& ds, std::span<const Detection> dets,
                         const EvalConfig& eval_cfg = {},
                         const DiagnoseConfig& cfg = {});

}  // namespace detbound
