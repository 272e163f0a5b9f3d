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
#include <cassert>

#include "detbound/simd/kernels.hpp"

namespace detbound::simd::scalar {

void iou_one_to_many(const BBox& box, const BoxColumns& boxes,
                     std::span<double> out) {
  assert(out.size() == boxes.size());
  const double ax1 = box.x;
  const double ay1 = box.y;
  const double ax2 = box.x + box.w;
  const double ay2 = box.y + box.h;
  const double area_a = (ax2 - ax1) * (ay2 - ay1);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double bx1 = boxes.x1[j];
    const double by1 = boxes.y1[j];
    const double bx2 = boxes.x2[j];
    const double by2 = boxes.y2[j];
    double iw = (ax2 < bx2 ? ax2 : bx2) - (ax1 > bx1 ? ax1 : bx1);
    double ih = (ay2 < by2 ? ay2 : by2) - (ay1 > by1 ? ay1 : by1);
    iw = iw > 0.0 ? iw : 0.0;
    ih = ih > 0.0 ? ih : 0.0;
    const double inter = iw * ih;
    const double area_b = (bx2 - bx1) * (by2 - by1);
    out[j] = inter / (area_a + area_b - inter);
  }
}

void convolve_taps(std::span<const float> src, std::size_t stride,
                   std::span<const float> taps, std::span<float> dst) {
  assert(!taps.empty());
  assert(src.size() >= dst.size() + (taps.size() - 1) * stride);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    float acc = taps[0] * src[i];
    for (std::size_t k = 1; k < taps.size(); ++k) {
      acc = acc + taps[k] * src[i + k * stride];
    }
    dst[i] = acc;
  }
}

}  // namespace detbound::simd::scalar
