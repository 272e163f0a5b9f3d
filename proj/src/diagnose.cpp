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

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "detbound/error.hpp"
#include "detbound/parallel.hpp"
#include "detbound/simd/kernels.hpp"

namespace detbound {

void DiagnoseConfig::validate() const {
  if (!(t_bg > 0.0 && t_bg < t_loc && t_loc <= 1.0)) {
    throw PreconditionError("DiagnoseConfig: need 0 < t_bg < t_loc <= 1");
  }
  if (!(miss_score >= 0.0 && miss_score <= 1.0)) {
    throw PreconditionError("DiagnoseConfig: miss_score outside [0, 1]");
  }
}

std::string_view to_string(DetectionLabel label) {
  switch (label) {
    case DetectionLabel::TruePositive: return "true_positive";
    case DetectionLabel::BackgroundError: return "background";
    case DetectionLabel::Mislocalized: return "mislocalized";
    case DetectionLabel::Duplicate: return "duplicate";
  }
  return "?";
}

std::string_view to_string(TargetLabel label) {
  return label == TargetLabel::Matched ? "matched" : "missed";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::RemoveBackground: return "remove_background";
    case Stage::FixLocalization: return "fix_localization";
    case Stage::RemoveDuplicates: return "remove_duplicates";
    case Stage::FixMisses: return "fix_misses";
  }
  return "?";
}

LabelCounts& LabelCounts::operator+=(const LabelCounts& o) {
  true_positive += o.true_positive;
  background += o.background;
  mislocalized += o.mislocalized;
  duplicate += o.duplicate;
  missed += o.missed;
  return *this;
}

ErrorLabels label_errors(std::span<const Detection> ranked_dets,
                         std::span<const GroundTruth> gts,
                         const DiagnoseConfig& cfg) {
  cfg.validate();
  const std::size_t nd = ranked_dets.size();
  const std::size_t ng = gts.size();
  std::vector<BBox> d, g;
  for (const auto& x : ranked_dets) d.push_back(x.bbox);
  for (const auto& x : gts) g.push_back(x.bbox);
  const auto ious = simd::iou_matrix(d, g);
  const auto match = match_with_ious(ious, nd, ng, cfg.t_loc);

  ErrorLabels labels;
  labels.detections.resize(nd);
  labels.target_of.resize(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    const double max_iou = match.det_max_iou[i];
    if (ng == 0 || max_iou <= cfg.t_bg) {
      labels.detections[i] = DetectionLabel::BackgroundError;
      labels.target_of[i] = match.det_argmax_gt[i];
    } else if (match.det_to_gt[i]) {
      labels.detections[i] = DetectionLabel::TruePositive;
      labels.target_of[i] = match.det_to_gt[i];
    } else if (max_iou >= cfg.t_loc) {
      // Every target it reaches at t_loc was claimed by a higher-ranked one.
      labels.detections[i] = DetectionLabel::Duplicate;
      labels.target_of[i] = match.det_argmax_gt[i];
    } else {
      labels.detections[i] = DetectionLabel::Mislocalized;
      labels.target_of[i] = match.det_argmax_gt[i];
    }
  }
  labels.targets.assign(ng, TargetLabel::Matched);
  for (std::size_t j = 0; j < ng; ++j) {
    if (match.gt_to_det[j]) continue;
    double best = 0.0;
    for (std::size_t i = 0; i < nd; ++i) {
      if (!match.det_to_gt[i]) best = std::max(best, ious[i * ng + j]);
    }
    if (best <= cfg.t_bg) labels.targets[j] = TargetLabel::Missed;
  }
  return labels;
}

namespace {

LabelCounts count_labels(const ErrorLabels& labels) {
  LabelCounts c;
  for (auto l : labels.detections) {
    switch (l) {
      case DetectionLabel::TruePositive: ++c.true_positive; break;
      case DetectionLabel::BackgroundError: ++c.background; break;
      case DetectionLabel::Mislocalized: ++c.mislocalized; break;
      case DetectionLabel::Duplicate: ++c.duplicate; break;
    }
  }
  for (auto t : labels.targets) {
    if (t == TargetLabel::Missed) ++c.missed;
  }
  return c;
}

std::vector<std::uint64_t> iota_keys(std::size_t n, std::uint64_t start) {
  std::vector<std::uint64_t> k(n);
  std::iota(k.begin(), k.end(), start);
  return k;
}

std::vector<std::uint64_t> keys_by_annotation_id(
    const std::vector<GroundTruth>& gts, std::uint64_t start) {
  std::vector<std::size_t> order(gts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gts[a].id < gts[b].id;
  });
  std::vector<std::uint64_t> keys(gts.size());
  for (std::size_t r = 0; r < order.size(); ++r) keys[order[r]] = start + r;
  return keys;
}

}  // namespace

StagePipeline::StagePipeline(std::vector<Detection> dets,
                             std::vector<GroundTruth> gts, DiagnoseConfig cfg)
    : StagePipeline(dets, iota_keys(dets.size(), 0), gts,
                    keys_by_annotation_id(gts, dets.size()), cfg) {}

StagePipeline::StagePipeline(std::vector<Detection> dets,
                             std::vector<std::uint64_t> det_keys,
                             std::vector<GroundTruth> gts,
                             std::vector<std::uint64_t> miss_keys,
                             DiagnoseConfig cfg)
    : dets_(std::move(dets)),
      keys_(std::move(det_keys)),
      gts_(std::move(gts)),
      miss_keys_(std::move(miss_keys)),
      cfg_(cfg) {
  cfg_.validate();
  if (keys_.size() != dets_.size() || miss_keys_.size() != gts_.size()) {
    throw PreconditionError("StagePipeline: key count mismatch");
  }
}

ErrorLabels StagePipeline::current_labels() const {
  const auto order = rank_by_score(dets_);
  std::vector<Detection> ranked;
  ranked.reserve(order.size());
  for (auto i : order) ranked.push_back(dets_[i]);
  const auto ranked_labels = label_errors(ranked, gts_, cfg_);
  ErrorLabels labels;
  labels.detections.resize(dets_.size());
  labels.target_of.resize(dets_.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    labels.detections[order[r]] = ranked_labels.detections[r];
    labels.target_of[order[r]] = ranked_labels.target_of[r];
  }
  labels.targets = ranked_labels.targets;
  return labels;
}

LabelCounts StagePipeline::current_counts() const {
  return count_labels(current_labels());
}

LabelCounts StagePipeline::apply(Stage stage) {
  const int want = static_cast<int>(stage);
  const int have = last_ ? static_cast<int>(*last_) : -1;
  if (want != have && want != have + 1) {
    throw PreconditionError(fmt::format(
        "stage {} applied out of order (last applied: {})", to_string(stage),
        last_ ? to_string(*last_) : std::string_view("none")));
  }
  const auto labels = current_labels();
  const auto counts = count_labels(labels);

  auto remove_if_label = [&](DetectionLabel drop) {
    std::vector<Detection> kept;
    std::vector<std::uint64_t> kept_keys;
    for (std::size_t i = 0; i < dets_.size(); ++i) {
      if (labels.detections[i] == drop) continue;
      kept.push_back(dets_[i]);
      kept_keys.push_back(keys_[i]);
    }
    dets_ = std::move(kept);
    keys_ = std::move(kept_keys);
  };

  switch (stage) {
    case Stage::RemoveBackground:
      remove_if_label(DetectionLabel::BackgroundError);
      break;
    case Stage::FixLocalization:
      for (std::size_t i = 0; i < dets_.size(); ++i) {
        if (labels.detections[i] == DetectionLabel::Mislocalized) {
          dets_[i].bbox = gts_[*labels.target_of[i]].bbox;
        }
      }
      break;
    case Stage::RemoveDuplicates:
      remove_if_label(DetectionLabel::Duplicate);
      break;
    case Stage::FixMisses:
      for (std::size_t i = 0; i < dets_.size(); ++i) {
        if (labels.detections[i] == DetectionLabel::TruePositive) {
          dets_[i].bbox = gts_[*labels.target_of[i]].bbox;
        }
      }
      for (std::size_t j = 0; j < gts_.size(); ++j) {
        if (labels.targets[j] != TargetLabel::Missed) continue;
        dets_.push_back({gts_[j].image_id, gts_[j].category_id, gts_[j].bbox,
                         cfg_.miss_score});
        keys_.push_back(miss_keys_[j]);
      }
      // Keep ingestion order sorted by key.
      {
        std::vector<std::size_t> order(dets_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return keys_[a] < keys_[b]; });
        std::vector<Detection> d;
        std::vector<std::uint64_t> k;
        for (auto o : order) {
          d.push_back(dets_[o]);
          k.push_back(keys_[o]);
        }
        dets_ = std::move(d);
        keys_ = std::move(k);
      }
      break;
  }
  last_ = stage;
  return counts;
}

std::vector<Detection> apply_stages_through(Stage stage,
                                            std::span<const Detection> dets,
                                            std::span<const GroundTruth> gts,
                                            const DiagnoseConfig& cfg) {
  StagePipeline p({dets.begin(), dets.end()}, {gts.begin(), gts.end()}, cfg);
  for (auto s : kAllStages) {
    p.apply(s);
    if (s == stage) break;
  }
  return p.detections();
}

DiagnosisReport diagnose(const Dataset& ds, std::span<const Detection> dets,
                         const EvalConfig& eval_cfg, const DiagnoseConfig& cfg) {
  cfg.validate();
  eval_cfg.validate();

  struct Key {
    CategoryId category;
    ImageId image;
    auto operator<=>(const Key&) const = default;
  };
  struct Group {
    std::vector<Detection> dets;
    std::vector<std::uint64_t> det_keys;
    std::vector<GroundTruth> gts;
    std::vector<std::uint64_t> miss_keys;
  };
  std::map<Key, Group> groups;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    auto& g = groups[{dets[i].category_id, dets[i].image_id}];
    g.dets.push_back(dets[i]);
    g.det_keys.push_back(i);
  }
  // Added misses rank after every original detection, by annotation id.
  std::vector<std::size_t> ann_order(ds.annotations.size());
  std::iota(ann_order.begin(), ann_order.end(), std::size_t{0});
  std::stable_sort(ann_order.begin(), ann_order.end(), [&](std::size_t a, std::size_t b) {
    return ds.annotations[a].id < ds.annotations[b].id;
  });
  std::vector<std::uint64_t> miss_key(ds.annotations.size());
  for (std::size_t r = 0; r < ann_order.size(); ++r) {
    miss_key[ann_order[r]] = dets.size() + r;
  }
  for (std::size_t i = 0; i < ds.annotations.size(); ++i) {
    const auto& a = ds.annotations[i];
    auto& g = groups[{a.category_id, a.image_id}];
    g.gts.push_back(a);
    g.miss_keys.push_back(miss_key[i]);
  }

  std::vector<Key> keys;
  std::vector<StagePipeline> pipelines;
  for (auto& [k, g] : groups) {
    keys.push_back(k);
    pipelines.emplace_back(std::move(g.dets), std::move(g.det_keys),
                           std::move(g.gts), std::move(g.miss_keys), cfg);
  }

  auto collect = [&] {
    std::vector<std::pair<std::uint64_t, Detection>> all;
    for (const auto& p : pipelines) {
      for (std::size_t i = 0; i < p.detections().size(); ++i) {
        all.emplace_back(p.keys()[i], p.detections()[i]);
      }
    }
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Detection> out;
    out.reserve(all.size());
    for (auto& [k, d] : all) out.push_back(d);
    return out;
  };

  DiagnosisReport report;
  report.map_baseline = evaluate(ds, dets, eval_cfg).map;
  std::array<std::optional<double>*, 4> slots = {
      &report.map_after_cls_removal, &report.map_after_localization_fix,
      &report.map_after_duplicate_removal, &report.map_after_miss_fix};

  std::vector<Category> cats = ds.categories;
  std::stable_sort(cats.begin(), cats.end(),
                   [](const Category& a, const Category& b) { return a.id < b.id; });

  for (std::size_t s = 0; s < kAllStages.size(); ++s) {
    const Stage stage = kAllStages[s];
    std::vector<LabelCounts> pair_counts(pipelines.size());
    parallel_for(pipelines.size(), eval_cfg.threads,
                 [&](std::size_t i) { pair_counts[i] = pipelines[i].apply(stage); });
    std::map<CategoryId, LabelCounts> per_cat;
    for (const auto& c : cats) per_cat[c.id];
    for (std::size_t i = 0; i < pipelines.size(); ++i) {
      per_cat[keys[i].category] += pair_counts[i];
    }
    for (const auto& [cat, c] : per_cat) report.counts.push_back({cat, stage, c});
    *slots[s] = evaluate(ds, collect(), eval_cfg).map;
  }
  return report;
}

}  // namespace detbound
