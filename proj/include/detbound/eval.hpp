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

// COCO-style evaluation: greedy score-ranked matching, precision/recall
// curves and AP with per-IOU, per-size and per-category breakdowns.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "detbound/data.hpp"

namespace detbound {

enum class Interpolation { Coco101, VocAllPoints };

std::string_view to_string(Interpolation mode);
Interpolation parse_interpolation(std::string_view text);

// 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_thresholds();

struct EvalConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  AreaThresholds area_thresholds;
  // Per image and category, highest scores kept. nullopt = unlimited.
  std::optional<std::size_t> max_dets_per_image = 100;
  Interpolation interpolation = Interpolation::Coco101;
  // Worker threads for per-(image, category) matching; 0 = hardware.
  unsigned threads = 1;
  // Keep the ranked PR curves in the report (for plot export).
  bool keep_curves = false;

  // Throws PreconditionError on unsorted or out-of-range thresholds.
  void validate() const;
};

// Greedy assignment for one (image, category) pair. Indices refer to the
// ranked detection and ground-truth spans passed to the matcher.
struct MatchResult {
  std::vector<std::optional<std::size_t>> det_to_gt;
  std::vector<double> det_max_iou;
  std::vector<std::optional<std::size_t>> det_argmax_gt;
  std::vector<std::optional<std::size_t>> gt_to_det;

  bool is_true_positive(std::size_t det) const {
    return det_to_gt[det].has_value();
  }
};

// Ranks detections by score (descending); equal scores keep input order.
std::vector<std::size_t> rank_by_score(std::span<const Detection> dets);

// Scans `ranked_dets` in order; each takes the highest-IOU target that is
// still free, provided that IOU >= threshold. On equal IOU the later target
// in `gts` wins. dets_x_gts is the row-major IOU matrix.
MatchResult match_with_ious(std::span<const double> dets_x_gts,
                            std::size_t num_dets, std::size_t num_gts,
                            double threshold);

MatchResult match_image_category(std::span<const Detection> ranked_dets,
                                 std::span<const GroundTruth> gts,
                                 double threshold);

struct PRCurve {
  // Ranked detections that count (ignored ones already removed).
  std::vector<double> scores;
  std::vector<bool> is_tp;
  std::size_t n_gt = 0;

  std::vector<double> recall() const;
  std::vector<double> precision() const;

  friend bool operator==(const PRCurve&, const PRCurve&) = default;
};

// nullopt when n_gt == 0.
std::optional<double> average_precision(const PRCurve& curve,
                                        Interpolation mode);

enum class AreaRange { All, Small, Medium, Large };
inline constexpr std::size_t kNumAreaRanges = 4;
std::string_view to_string(AreaRange range);

struct CategoryReport {
  CategoryId category_id = 0;
  std::string name;
  std::size_t n_gt = 0;
  // Values are x100; nullopt when the category has no targets in range.
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
  std::vector<std::optional<double>> ap_per_iou;
  std::vector<std::optional<double>> recall_per_iou;

  friend bool operator==(const CategoryReport&, const CategoryReport&) = default;
};

struct CurveRecord {
  CategoryId category_id = 0;
  double iou_threshold = 0.0;
  PRCurve curve;

  friend bool operator==(const CurveRecord&, const CurveRecord&) = default;
};

struct EvalReport {
  std::vector<double> iou_thresholds;
  Interpolation interpolation = Interpolation::Coco101;
  std::optional<double> map;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
  std::vector<std::optional<double>> ap_per_iou;
  std::vector<std::optional<double>> recall_per_iou;
  std::vector<CategoryReport> categories;
  // All-area curves, only when EvalConfig::keep_curves.
  std::vector<CurveRecord> curves;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate(const Dataset& ds, std::span<const Detection> dets,
                    const EvalConfig& cfg = {});

// Stable sort by (score desc, image_id, category_id, bbox). Applying it after
// any shuffle restores one deterministic order.
void sort_canonical(std::vector<Detection>& dets);

// Running mean; exact on constant sequences. Skips nullopt entries and
// returns nullopt when nothing is defined.
std::optional<double> mean_defined(std::span<const std::optional<double>> v);

}  // namespace detbound
