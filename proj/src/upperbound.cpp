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

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "detbound/error.hpp"

namespace detbound {

std::string_view to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::MostConfidentBox: return "most_confident_box";
    case AggregationMode::MostFrequentLabel: return "most_frequent_label";
  }
  return "?";
}

AggregationMode parse_aggregation_mode(std::string_view text) {
  if (text == "most_confident_box" || text == "most-confident") {
    return AggregationMode::MostConfidentBox;
  }
  if (text == "most_frequent_label" || text == "most-frequent") {
    return AggregationMode::MostFrequentLabel;
  }
  throw PreconditionError(fmt::format("unknown aggregation mode '{}'", text));
}

std::vector<Detection> detections_from_labels(
    const Dataset& ds, std::span<const ClassifierOutput> outputs,
    const UapOptions& options) {
  std::unordered_map<AnnotationId, const ClassifierOutput*> by_ann;
  for (const auto& o : outputs) by_ann.emplace(o.annotation_id, &o);

  std::vector<AnnotationId> missing;
  std::vector<Detection> dets;
  dets.reserve(ds.annotations.size());
  for (const auto& ann : ds.annotations) {
    auto it = by_ann.find(ann.id);
    if (it == by_ann.end()) {
      missing.push_back(ann.id);
      continue;
    }
    const auto& p = it->second->prediction;
    dets.push_back({ann.image_id, p.label, ann.bbox,
                    options.constant_confidence ? 1.0 : p.confidence});
  }
  if (!missing.empty()) {
    throw ValidationError(fmt::format("no classifier output for annotation(s) {}",
                                      fmt::join(missing, ", ")));
  }
  return dets;
}

EvalReport uap_strategy1(const Dataset& ds,
                         std::span<const ClassifierOutput> outputs,
                         const EvalConfig& cfg, const UapOptions& options) {
  return evaluate(ds, detections_from_labels(ds, outputs, options), cfg);
}

LabelScore aggregate_neighborhood(std::span<const LabelScore> predictions,
                                  AggregationMode mode) {
  if (predictions.empty()) {
    throw PreconditionError("aggregate_neighborhood: empty prediction list");
  }
  if (mode == AggregationMode::MostConfidentBox) {
    const LabelScore* best = &predictions.front();
    for (const auto& p : predictions) {
      if (p.confidence > best->confidence) best = &p;
    }
    return *best;
  }
  struct Tally {
    std::size_t count = 0;
    double max_confidence = 0.0;
  };
  std::map<CategoryId, Tally> tallies;  // ordered: lower id first on full ties
  for (const auto& p : predictions) {
    auto& t = tallies[p.label];
    t.max_confidence = t.count == 0 ? p.confidence
                                    : std::max(t.max_confidence, p.confidence);
    ++t.count;
  }
  auto best = tallies.begin();
  for (auto it = std::next(tallies.begin()); it != tallies.end(); ++it) {
    const auto& [c, t] = *it;
    const auto& b = best->second;
    if (t.count > b.count ||
        (t.count == b.count && t.max_confidence > b.max_confidence)) {
      best = it;
    }
  }
  return {best->first, best->second.max_confidence};
}

std::vector<ClassifierOutput> aggregate_outputs(
    std::span<const ClassifierOutput> outputs, AggregationMode mode,
    bool neighbors_only) {
  std::vector<ClassifierOutput> result;
  result.reserve(outputs.size());
  for (const auto& o : outputs) {
    std::vector<LabelScore> pool;
    if (!neighbors_only || o.neighbors.empty()) pool.push_back(o.prediction);
    for (const auto& n : o.neighbors) pool.push_back(n.prediction);
    ClassifierOutput relabeled = o;
    relabeled.prediction = aggregate_neighborhood(pool, mode);
    result.push_back(std::move(relabeled));
  }
  return result;
}

EvalReport uap_strategy2(const Dataset& ds,
                         std::span<const ClassifierOutput> outputs,
                         AggregationMode mode, const EvalConfig& cfg,
                         const UapOptions& options) {
  const auto relabeled = aggregate_outputs(outputs, mode, options.neighbors_only);
  return uap_strategy1(ds, relabeled, cfg, options);
}

LinearFit correlate_accuracy_uap(std::span<const AccuracyUapPoint> points) {
  if (points.size() < 2) {
    throw PreconditionError("correlate: at least two points required");
  }
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.accuracy;
    my += p.uap;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = p.accuracy - mx;
    const double dy = p.uap - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    throw PreconditionError("correlate: accuracy values have no variance");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (const auto& p : points) {
      const double r = p.uap - (fit.intercept + fit.slope * p.accuracy);
      ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

double classifier_accuracy(const Dataset& ds,
                           std::span<const ClassifierOutput> outputs) {
  if (outputs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& o : outputs) {
    const auto* ann = ds.find_annotation(o.annotation_id);
    if (ann != nullptr && ann->category_id == o.prediction.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(outputs.size());
}

}  // namespace detbound
