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
#include "detbound/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <tuple>

#include <fmt/format.h>

#include "detbound/error.hpp"
#include "detbound/parallel.hpp"
#include "detbound/simd/kernels.hpp"

namespace detbound {

namespace {

// Matching never requires IOU above this, so IOU = 1 thresholds stay usable
// under rounding.
constexpr double kMaxMatchIou = 1.0 - 1e-10;
constexpr std::size_t kRecallPoints = 101;

enum DetStatus : std::uint8_t { kFalsePositive = 0, kTruePositive = 1, kIgnored = 2 };

// Greedy matcher shared by the public entry point and the evaluator. Targets
// flagged in `gt_ignore` must come after all regular targets; a detection
// that already holds a regular target stops at the first ignored one.
MatchResult greedy_match(std::span<const double> ious, std::size_t nd,
                         std::size_t ng, double threshold,
                         std::span<const std::uint8_t> gt_ignore) {
  MatchResult r;
  r.det_to_gt.assign(nd, std::nullopt);
  r.det_max_iou.assign(nd, 0.0);
  r.det_argmax_gt.assign(nd, std::nullopt);
  r.gt_to_det.assign(ng, std::nullopt);
  const double floor_iou = std::min(threshold, kMaxMatchIou);
  for (std::size_t d = 0; d < nd; ++d) {
    const double* row = ious.data() + d * ng;
    double best = floor_iou;
    std::optional<std::size_t> m;
    double max_iou = -1.0;
    for (std::size_t g = 0; g < ng; ++g) {
      if (row[g] > max_iou) {
        max_iou = row[g];
        r.det_argmax_gt[d] = g;
      }
    }
    r.det_max_iou[d] = ng ? max_iou : 0.0;
    for (std::size_t g = 0; g < ng; ++g) {
      if (r.gt_to_det[g]) continue;
      if (!gt_ignore.empty() && m && !gt_ignore[*m] && gt_ignore[g]) break;
      if (row[g] < best) continue;
      best = row[g];
      m = g;
    }
    if (m) {
      r.det_to_gt[d] = *m;
      r.gt_to_det[*m] = d;
    }
  }
  return r;
}

bool in_range(double area, AreaRange range, const AreaThresholds& t) {
  switch (range) {
    case AreaRange::All: return true;
    case AreaRange::Small: return size_bucket(area, t) == SizeClass::Small;
    case AreaRange::Medium: return size_bucket(area, t) == SizeClass::Medium;
    case AreaRange::Large: return size_bucket(area, t) == SizeClass::Large;
  }
  return false;
}

struct PairKey {
  CategoryId category;
  ImageId image;
  auto operator<=>(const PairKey&) const = default;
};

struct PairInput {
  std::vector<std::size_t> gts;   // indices into ds.annotations
  std::vector<std::size_t> dets;  // indices into dets, ingestion order
};

// Per-pair matching outcome for every area range and threshold.
struct PairEval {
  std::vector<std::size_t> ranked;  // kept detection indices, rank order
  // status[(a * T + t) * D + d]
  std::vector<std::uint8_t> status;
  std::array<std::size_t, kNumAreaRanges> n_regular{};
};

PairEval evaluate_pair(const Dataset& ds, std::span<const Detection> dets,
                       const PairInput& in, const EvalConfig& cfg) {
  PairEval out;
  std::vector<Detection> local;
  local.reserve(in.dets.size());
  for (auto i : in.dets) local.push_back(dets[i]);
  auto order = rank_by_score(local);
  if (cfg.max_dets_per_image && order.size() > *cfg.max_dets_per_image) {
    order.resize(*cfg.max_dets_per_image);
  }
  out.ranked.reserve(order.size());
  for (auto o : order) out.ranked.push_back(in.dets[o]);

  const std::size_t nd = out.ranked.size();
  const std::size_t ng = in.gts.size();
  const std::size_t nt = cfg.iou_thresholds.size();

  std::vector<BBox> det_boxes, gt_boxes;
  for (auto i : out.ranked) det_boxes.push_back(dets[i].bbox);
  for (auto i : in.gts) gt_boxes.push_back(ds.annotations[i].bbox);
  const auto ious = simd::iou_matrix(det_boxes, gt_boxes);

  out.status.assign(kNumAreaRanges * nt * nd, kFalsePositive);
  for (std::size_t a = 0; a < kNumAreaRanges; ++a) {
    const auto range = static_cast<AreaRange>(a);
    // Regular targets first, out-of-range targets after (stable).
    std::vector<std::size_t> gorder;
    std::vector<std::uint8_t> ignore;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t g = 0; g < ng; ++g) {
        const bool regular =
            in_range(ds.annotations[in.gts[g]].area, range, cfg.area_thresholds);
        if (regular == (pass == 0)) {
          gorder.push_back(g);
          ignore.push_back(regular ? 0 : 1);
        }
      }
    }
    out.n_regular[a] = static_cast<std::size_t>(
        std::count(ignore.begin(), ignore.end(), std::uint8_t{0}));
    std::vector<double> permuted(nd * ng);
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::size_t g = 0; g < ng; ++g) {
        permuted[d * ng + g] = ious[d * ng + gorder[g]];
      }
    }
    for (std::size_t t = 0; t < nt; ++t) {
      const auto m = greedy_match(permuted, nd, ng, cfg.iou_thresholds[t], ignore);
      auto* st = out.status.data() + (a * nt + t) * nd;
      for (std::size_t d = 0; d < nd; ++d) {
        if (m.det_to_gt[d]) {
          st[d] = ignore[*m.det_to_gt[d]] ? kIgnored : kTruePositive;
        } else {
          st[d] = in_range(dets[out.ranked[d]].bbox.area(), range,
                           cfg.area_thresholds)
                      ? kFalsePositive
                      : kIgnored;
        }
      }
    }
  }
  return out;
}

std::optional<std::size_t> find_threshold(const std::vector<double>& grid,
                                          double value) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::fabs(grid[i] - value) < 1e-9) return i;
  }
  return std::nullopt;
}

std::optional<double> scaled(std::optional<double> v) {
  if (!v) return v;
  return *v * 100.0;
}

}  // namespace

std::string_view to_string(Interpolation mode) {
  switch (mode) {
    case Interpolation::Coco101: return "coco_101pt";
    case Interpolation::VocAllPoints: return "voc_all_points";
  }
  return "?";
}

Interpolation parse_interpolation(std::string_view text) {
  if (text == "coco_101pt" || text == "coco") return Interpolation::Coco101;
  if (text == "voc_all_points" || text == "voc") return Interpolation::VocAllPoints;
  throw PreconditionError(fmt::format("unknown interpolation '{}'", text));
}

std::string_view to_string(AreaRange range) {
  switch (range) {
    case AreaRange::All: return "all";
    case AreaRange::Small: return "small";
    case AreaRange::Medium: return "medium";
    case AreaRange::Large: return "large";
  }
  return "?";
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) {
    throw PreconditionError("EvalConfig: at least one IOU threshold required");
  }
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) {
      throw PreconditionError("EvalConfig: IOU thresholds must lie in (0, 1]");
    }
    if (i > 0 && !(t > iou_thresholds[i - 1])) {
      throw PreconditionError("EvalConfig: IOU thresholds must increase");
    }
  }
  if (!(area_thresholds.small_max > 0.0 &&
        area_thresholds.medium_max > area_thresholds.small_max)) {
    throw PreconditionError("EvalConfig: area thresholds must increase");
  }
  if (max_dets_per_image && *max_dets_per_image == 0) {
    throw PreconditionError("EvalConfig: max_dets_per_image must be positive");
  }
}

std::vector<std::size_t> rank_by_score(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

MatchResult match_with_ious(std::span<const double> dets_x_gts,
                            std::size_t num_dets, std::size_t num_gts,
                            double threshold) {
  if (dets_x_gts.size() != num_dets * num_gts) {
    throw PreconditionError("match: IOU matrix has the wrong size");
  }
  return greedy_match(dets_x_gts, num_dets, num_gts, threshold, {});
}

MatchResult match_image_category(std::span<const Detection> ranked_dets,
                                 std::span<const GroundTruth> gts,
                                 double threshold) {
  std::vector<BBox> d, g;
  for (const auto& x : ranked_dets) d.push_back(x.bbox);
  for (const auto& x : gts) g.push_back(x.bbox);
  return greedy_match(simd::iou_matrix(d, g), d.size(), g.size(), threshold, {});
}

std::vector<double> PRCurve::recall() const {
  std::vector<double> r(is_tp.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < is_tp.size(); ++i) {
    tp += is_tp[i] ? 1 : 0;
    r[i] = n_gt ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0;
  }
  return r;
}

std::vector<double> PRCurve::precision() const {
  std::vector<double> p(is_tp.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < is_tp.size(); ++i) {
    tp += is_tp[i] ? 1 : 0;
    p[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  return p;
}

std::optional<double> average_precision(const PRCurve& curve,
                                        Interpolation mode) {
  if (curve.n_gt == 0) return std::nullopt;
  const auto rc = curve.recall();
  auto pr = curve.precision();
  // Precision envelope: best precision at any recall at or beyond this rank.
  for (std::size_t i = pr.size(); i-- > 1;) {
    pr[i - 1] = std::max(pr[i - 1], pr[i]);
  }
  if (mode == Interpolation::Coco101) {
    double sum = 0.0;
    for (std::size_t k = 0; k < kRecallPoints; ++k) {
      const double r = static_cast<double>(k) / 100.0;
      const auto it = std::lower_bound(rc.begin(), rc.end(), r);
      if (it != rc.end()) sum += pr[static_cast<std::size_t>(it - rc.begin())];
    }
    return sum / static_cast<double>(kRecallPoints);
  }
  // All-points: precision envelope integrated over recall steps.
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < rc.size(); ++i) {
    if (rc[i] > prev_recall) {
      ap += (rc[i] - prev_recall) * pr[i];
      prev_recall = rc[i];
    }
  }
  return ap;
}

std::optional<double> mean_defined(std::span<const std::optional<double>> v) {
  std::optional<double> mean;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (!x) continue;
    ++n;
    if (!mean) {
      mean = *x;
    } else {
      *mean += (*x - *mean) / static_cast<double>(n);
    }
  }
  return mean;
}

void sort_canonical(std::vector<Detection>& dets) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.image_id != b.image_id) return a.image_id < b.image_id;
                     if (a.category_id != b.category_id) {
                       return a.category_id < b.category_id;
                     }
                     return bbox_less(a.bbox, b.bbox);
                   });
}

EvalReport evaluate(const Dataset& ds, std::span<const Detection> dets,
                    const EvalConfig& cfg) {
  cfg.validate();
  const std::size_t nt = cfg.iou_thresholds.size();

  std::map<PairKey, PairInput> pairs;
  for (std::size_t i = 0; i < ds.annotations.size(); ++i) {
    const auto& a = ds.annotations[i];
    pairs[{a.category_id, a.image_id}].gts.push_back(i);
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    pairs[{dets[i].category_id, dets[i].image_id}].dets.push_back(i);
  }
  std::vector<const PairKey*> keys;
  std::vector<const PairInput*> inputs;
  for (const auto& [k, v] : pairs) {
    keys.push_back(&k);
    inputs.push_back(&v);
  }

  std::vector<PairEval> evals(inputs.size());
  parallel_for(inputs.size(), cfg.threads, [&](std::size_t i) {
    evals[i] = evaluate_pair(ds, dets, *inputs[i], cfg);
  });

  std::vector<Category> cats = ds.categories;
  std::stable_sort(cats.begin(), cats.end(),
                   [](const Category& a, const Category& b) { return a.id < b.id; });

  EvalReport report;
  report.iou_thresholds = cfg.iou_thresholds;
  report.interpolation = cfg.interpolation;

  // ap[a][t][k]
  std::array<std::vector<std::vector<std::optional<double>>>, kNumAreaRanges> ap;
  for (auto& per_area : ap) per_area.assign(nt, {});
  std::vector<std::vector<std::optional<double>>> recall(nt);

  std::size_t pair_cursor = 0;
  for (const auto& cat : cats) {
    // Pairs are ordered by (category, image); collect this category's run.
    while (pair_cursor < keys.size() && keys[pair_cursor]->category < cat.id) {
      ++pair_cursor;
    }
    std::size_t pair_end = pair_cursor;
    while (pair_end < keys.size() && keys[pair_end]->category == cat.id) ++pair_end;

    struct Ranked {
      double score;
      std::size_t ingestion;
      std::size_t pair;
      std::size_t local;
    };
    std::vector<Ranked> all;
    std::array<std::size_t, kNumAreaRanges> n_regular{};
    std::size_t n_gt = 0;
    for (std::size_t p = pair_cursor; p < pair_end; ++p) {
      const auto& e = evals[p];
      for (std::size_t d = 0; d < e.ranked.size(); ++d) {
        all.push_back({dets[e.ranked[d]].score, e.ranked[d], p, d});
      }
      for (std::size_t a = 0; a < kNumAreaRanges; ++a) n_regular[a] += e.n_regular[a];
      n_gt += inputs[p]->gts.size();
    }
    std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.ingestion < b.ingestion;
    });

    CategoryReport cr;
    cr.category_id = cat.id;
    cr.name = cat.name;
    cr.n_gt = n_gt;
    std::array<std::vector<std::optional<double>>, kNumAreaRanges> cat_ap;
    for (std::size_t a = 0; a < kNumAreaRanges; ++a) {
      for (std::size_t t = 0; t < nt; ++t) {
        PRCurve curve;
        curve.n_gt = n_regular[a];
        for (const auto& r : all) {
          const auto& e = evals[r.pair];
          const auto s = e.status[(a * nt + t) * e.ranked.size() + r.local];
          if (s == kIgnored) continue;
          curve.scores.push_back(r.score);
          curve.is_tp.push_back(s == kTruePositive);
        }
        auto value = scaled(average_precision(curve, cfg.interpolation));
        cat_ap[a].push_back(value);
        ap[a][t].push_back(value);
        if (a == 0) {
          std::optional<double> rec;
          if (curve.n_gt > 0) {
            const auto rc = curve.recall();
            rec = rc.empty() ? 0.0 : rc.back() * 100.0;
          }
          cr.recall_per_iou.push_back(rec);
          recall[t].push_back(rec);
          if (cfg.keep_curves) {
            report.curves.push_back({cat.id, cfg.iou_thresholds[t], std::move(curve)});
          }
        }
      }
    }
    cr.ap_per_iou = cat_ap[0];
    cr.ap = mean_defined(cat_ap[0]);
    if (auto i = find_threshold(cfg.iou_thresholds, 0.5)) cr.ap50 = cat_ap[0][*i];
    if (auto i = find_threshold(cfg.iou_thresholds, 0.75)) cr.ap75 = cat_ap[0][*i];
    cr.ap_small = mean_defined(cat_ap[1]);
    cr.ap_medium = mean_defined(cat_ap[2]);
    cr.ap_large = mean_defined(cat_ap[3]);
    report.categories.push_back(std::move(cr));
    pair_cursor = pair_end;
  }

  // Category means per threshold, then the mean over thresholds.
  std::array<std::vector<std::optional<double>>, kNumAreaRanges> per_iou;
  for (std::size_t a = 0; a < kNumAreaRanges; ++a) {
    for (std::size_t t = 0; t < nt; ++t) per_iou[a].push_back(mean_defined(ap[a][t]));
  }
  report.ap_per_iou = per_iou[0];
  report.map = mean_defined(per_iou[0]);
  if (auto i = find_threshold(cfg.iou_thresholds, 0.5)) report.ap50 = per_iou[0][*i];
  if (auto i = find_threshold(cfg.iou_thresholds, 0.75)) report.ap75 = per_iou[0][*i];
  report.ap_small = mean_defined(per_iou[1]);
  report.ap_medium = mean_defined(per_iou[2]);
  report.ap_large = mean_defined(per_iou[3]);
  for (std::size_t t = 0; t < nt; ++t) {
    report.recall_per_iou.push_back(mean_defined(recall[t]));
  }
  return report;
}

}  // namespace detbound
