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
#include "detbound/geom.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "detbound/error.hpp"
#include "detbound/random.hpp"

namespace detbound {

namespace {

// Admissible alpha range is closed; allow rounding slack at the ends.
constexpr double kAlphaSlack = 1e-12;

}  // namespace

bool BBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0.0 && h > 0.0;
}

bool bbox_less(const BBox& a, const BBox& b) {
  return std::tie(a.x, a.y, a.w, a.h) < std::tie(b.x, b.y, b.w, b.h);
}

double iou(const BBox& a, const BBox& b) {
  const double ax2 = a.x + a.w;
  const double ay2 = a.y + a.h;
  const double bx2 = b.x + b.w;
  const double by2 = b.y + b.h;
  double iw = std::min(ax2, bx2) - std::max(a.x, b.x);
  double ih = std::min(ay2, by2) - std::max(a.y, b.y);
  iw = iw > 0.0 ? iw : 0.0;
  ih = ih > 0.0 ? ih : 0.0;
  const double inter = iw * ih;
  const double area_a = (ax2 - a.x) * (ay2 - a.y);
  const double area_b = (bx2 - b.x) * (by2 - b.y);
  return inter / (area_a + area_b - inter);
}

BBox scale_box(const BBox& b, double factor, double image_width,
               double image_height) {
  if (!(factor > 0.0)) {
    throw PreconditionError("scale_box: scale factor must be positive");
  }
  if (factor == 1.0 && b.x >= 0.0 && b.y >= 0.0 && b.right() <= image_width &&
      b.bottom() <= image_height) {
    return b;
  }
  const double w = factor * b.w;
  const double h = factor * b.h;
  const double x0 = std::max(0.0, b.center_x() - 0.5 * w);
  const double y0 = std::max(0.0, b.center_y() - 0.5 * h);
  const double x1 = std::min(image_width, b.center_x() + 0.5 * w);
  const double y1 = std::min(image_height, b.center_y() + 0.5 * h);
  if (!(x1 > x0) || !(y1 > y0)) {
    throw ValidationError("degenerate crop");
  }
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

std::string_view to_string(CornerCurve curve) {
  switch (curve) {
    case CornerCurve::P: return "P";
    case CornerCurve::Q: return "Q";
    case CornerCurve::R: return "R";
    case CornerCurve::S: return "S";
  }
  return "?";
}

double overlap_product(double gamma) { return 2.0 * gamma / (1.0 + gamma); }

LevelSetParam::LevelSetParam(double gamma, double alpha)
    : gamma_(gamma), alpha_(alpha), beta_(0.0) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw PreconditionError("level set: gamma must lie in (0, 1]");
  }
  const double product = overlap_product(gamma);
  if (!(alpha >= product - kAlphaSlack && alpha <= 1.0 + kAlphaSlack)) {
    throw PreconditionError("level set: alpha outside [2g/(1+g), 1]");
  }
  alpha_ = std::clamp(alpha, product, 1.0);
  beta_ = std::clamp(product / alpha_, product, 1.0);
}

LevelSetParam LevelSetParam::symmetric(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw PreconditionError("level set: gamma must lie in (0, 1]");
  }
  return LevelSetParam(gamma, std::sqrt(overlap_product(gamma)));
}

double LevelSetParam::intersection_area(const BBox& target) const {
  return overlap_width(target) * overlap_height(target);
}

BBox level_set_box(const BBox& target, const LevelSetParam& param,
                   CornerCurve curve) {
  // Offsets of the top-left corner relative to the target's top-left.
  const double dx = (1.0 - param.alpha()) * target.w;
  const double dy = (1.0 - param.beta()) * target.h;
  switch (curve) {
    case CornerCurve::P:
      return BBox{target.x - dx, target.y - dy, target.w, target.h};
    case CornerCurve::Q:
      return BBox{target.x + dx, target.y - dy, target.w, target.h};
    case CornerCurve::R:
      return BBox{target.x + dx, target.y + dy, target.w, target.h};
    case CornerCurve::S:
      return BBox{target.x - dx, target.y + dy, target.w, target.h};
  }
  return target;
}

BBox level_set_box(const BBox& target, double gamma, CornerCurve curve,
                   double alpha) {
  return level_set_box(target, LevelSetParam(gamma, alpha), curve);
}

std::vector<LevelSetSample> sample_level_set(const BBox& target,
                                             double min_gamma, std::size_t n,
                                             std::uint64_t seed) {
  if (n == 0) throw PreconditionError("sample_boxes: n must be >= 1");
  if (!(min_gamma > 0.0 && min_gamma <= 1.0)) {
    throw PreconditionError("sample_boxes: gamma must lie in (0, 1]");
  }
  Rng rng(seed);
  std::vector<LevelSetSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double gamma = uniform_real(rng, min_gamma, 1.0);
    const auto curve = kAllCornerCurves[uniform_index(rng, 4)];
    const double alpha = uniform_real(rng, overlap_product(gamma), 1.0);
    const LevelSetParam param(gamma, alpha);
    out.push_back({level_set_box(target, param, curve), gamma, curve,
                   param.alpha()});
  }
  return out;
}

std::vector<BBox> sample_boxes_min_iou(const BBox& target, double min_gamma,
                                       std::size_t n, std::uint64_t seed) {
  std::vector<BBox> boxes;
  for (const auto& s : sample_level_set(target, min_gamma, n, seed)) {
    boxes.push_back(s.box);
  }
  return boxes;
}

}  // namespace detbound
