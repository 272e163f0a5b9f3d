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

// Axis-aligned box geometry: IOU, context scaling and the constant-IOU level
// sets used to sample boxes around a target.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace detbound {

// Box in continuous pixel coordinates, (x, y) is the top-left corner.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }

  // Finite coordinates and strictly positive extent.
  bool valid() const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Lexicographic (x, y, w, h) ordering, used as a deterministic tie-break key.
bool bbox_less(const BBox& a, const BBox& b);

// Intersection over union. Areas are taken from the edge coordinates so that
// iou(b, b) == 1 exactly for every box.
double iou(const BBox& a, const BBox& b);

// Rescales `b` by `factor` around its center, then clips to
// [0, image_width] x [0, image_height]. Throws PreconditionError when
// factor <= 0 and ValidationError("degenerate crop") when clipping leaves no
// area.
BBox scale_box(const BBox& b, double factor, double image_width,
               double image_height);

// The four corner families of equal-size boxes overlapping a target.
// P: overlap at the target's top-left, Q: top-right, R: bottom-right,
// S: bottom-left.
enum class CornerCurve : std::uint8_t { P, Q, R, S };

inline constexpr std::array<CornerCurve, 4> kAllCornerCurves = {
    CornerCurve::P, CornerCurve::Q, CornerCurve::R, CornerCurve::S};

std::string_view to_string(CornerCurve curve);

// Point on the IOU level set of an equal-size box. The overlap region is
// alpha*U by beta*V where U, V are the target's width and height, and
// alpha*beta = 2*gamma / (1 + gamma).
class LevelSetParam {
 public:
  // Throws PreconditionError unless 0 < gamma <= 1 and alpha lies in
  // [2*gamma/(1+gamma), 1].
  LevelSetParam(double gamma, double alpha);

  // The symmetric point alpha = beta = sqrt(2*gamma/(1+gamma)).
  static LevelSetParam symmetric(double gamma);

  double gamma() const { return gamma_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  // Overlap side lengths and areas for a target of size (U, V).
  double overlap_width(const BBox& target) const { return alpha_ * target.w; }
  double overlap_height(const BBox& target) const { return beta_ * target.h; }
  double intersection_area(const BBox& target) const;
  static double target_area(const BBox& target) { return target.w * target.h; }

 private:
  double gamma_;
  double alpha_;
  double beta_;
};

// alpha*beta for a requested IOU.
double overlap_product(double gamma);

// Smallest admissible alpha (or beta) for a requested IOU.
inline double min_overlap_ratio(double gamma) { return overlap_product(gamma); }

// Box with the target's size whose IOU with the target is exactly gamma,
// placed on the requested corner curve.
BBox level_set_box(const BBox& target, const LevelSetParam& param,
                   CornerCurve curve);
BBox level_set_box(const BBox& target, double gamma, CornerCurve curve,
                   double alpha);

struct LevelSetSample {
  BBox box;
  double gamma = 1.0;  // exact IOU with the target
  CornerCurve curve = CornerCurve::P;
  double alpha = 1.0;
};

// Draws n samples with IOU >= min_gamma: gamma' ~ U[min_gamma, 1], a uniform
// corner curve and alpha ~ U[2*gamma'/(1+gamma'), 1]. Deterministic in seed.
// Boxes are not clipped to any image.
std::vector<LevelSetSample> sample_level_set(const BBox& target,
                                             double min_gamma, std::size_t n,
                                             std::uint64_t seed);

std::vector<BBox> sample_boxes_min_iou(const BBox& target, double min_gamma,
                                       std::size_t n, std::uint64_t seed);

}  // namespace detbound
