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

// Reference implementations used only by tests. They deliberately share no
// code with the library beyond the plain data types.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "detbound/data.hpp"

namespace detbound::testing {

double reference_iou(const BBox& a, const BBox& b);

// 101-point AP by direct enumeration. Recall comparisons are done on
// integers (100 * tp >= i * n_gt), so no rounding enters the envelope.
std::optional<double> reference_ap101(const std::vector<bool>& ranked_tp,
                                      std::size_t n_gt);

// Per category and threshold: greedy matching over the pooled, score-ranked
// detections, each taking its highest-IOU free target. Every target counts
// (no size restriction, no per-image cap).
struct ReferenceResult {
  // [threshold][category], x100; nullopt for categories without targets.
  std::vector<std::vector<std::optional<double>>> ap;
  std::optional<double> map;
};

// Whether each detection (in input order) is a true positive at `threshold`.
std::vector<bool> reference_true_positives(const Dataset& ds,
                                           std::span<const Detection> dets,
                                           double threshold);

ReferenceResult reference_evaluate(const Dataset& ds,
                                   std::span<const Detection> dets,
                                   const std::vector<double>& thresholds);

}  // namespace detbound::testing
