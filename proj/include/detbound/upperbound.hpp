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

// Upper-bound AP: score ground-truth boxes as if they were detections,
// labeled and scored by an object classifier.

#include <span>
#include <string_view>
#include <vector>

#include "detbound/data.hpp"
#include "detbound/eval.hpp"

namespace detbound {

enum class AggregationMode { MostConfidentBox, MostFrequentLabel };

std::string_view to_string(AggregationMode mode);
AggregationMode parse_aggregation_mode(std::string_view text);

struct UapOptions {
  // Replace every classifier confidence with 1.
  bool constant_confidence = false;
  // Strategy 2 only: aggregate over neighbors without the target's own
  // prediction (falls back to it when a target has no neighbors).
  bool neighbors_only = false;
};

// One detection per annotation: the annotation's box, the predicted label and
// the classifier confidence as score. Order follows ds.annotations. Throws
// ValidationError listing annotations without an output.
std::vector<Detection> detections_from_labels(
    const Dataset& ds, std::span<const ClassifierOutput> outputs,
    const UapOptions& options = {});

EvalReport uap_strategy1(const Dataset& ds,
                         std::span<const ClassifierOutput> outputs,
                         const EvalConfig& cfg = {},
                         const UapOptions& options = {});

// MostConfidentBox: the highest-confidence entry (earliest on ties).
// MostFrequentLabel: the modal label with the highest confidence seen for it;
// ties between modal labels go to the higher confidence, then the lower id.
// Throws PreconditionError on an empty list.
LabelScore aggregate_neighborhood(std::span<const LabelScore> predictions,
                                  AggregationMode mode);

// Per-annotation relabeling used by strategy 2.
std::vector<ClassifierOutput> aggregate_outputs(
    std::span<const ClassifierOutput> outputs, AggregationMode mode,
    bool neighbors_only = false);

EvalReport uap_strategy2(const Dataset& ds,
                         std::span<const ClassifierOutput> outputs,
                         AggregationMode mode, const EvalConfig& cfg = {},
                         const UapOptions& options = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

struct AccuracyUapPoint {
  double accuracy = 0.0;
  double uap = 0.0;
};

// Ordinary least squares of uap on accuracy. R^2 is 0 when uap is constant.
// Throws PreconditionError with fewer than two points or constant accuracy.
LinearFit correlate_accuracy_uap(std::span<const AccuracyUapPoint> points);

// Top-1 accuracy of classifier outputs against the annotations' labels.
double classifier_accuracy(const Dataset& ds,
                           std::span<const ClassifierOutput> outputs);

}  // namespace detbound
