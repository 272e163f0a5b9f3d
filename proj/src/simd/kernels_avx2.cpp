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
// Compiled with -mavx2 only; nothing here may run before the CPUID check in
// dispatch.cpp. Multiplies and adds stay separate so results match the
// scalar reference bit for bit.

#include <immintrin.h>

#include <cassert>

#include "detbound/simd/kernels.hpp"

namespace detbound::simd::avx2 {

void iou_one_to_many(const BBox& box, const BoxColumns& boxes,
                     std::span<double> out) {
  assert(out.size() == boxes.size());
  const double ax2s = box.x + box.w;
  const double ay2s = box.y + box.h;
  const double area_as = (ax2s - box.x) * (ay2s - box.y);
  const __m256d ax1 = _mm256_set1_pd(box.x);
  const __m256d ay1 = _mm256_set1_pd(box.y);
  const __m256d ax2 = _mm256_set1_pd(ax2s);
  const __m256d ay2 = _mm256_set1_pd(ay2s);
  const __m256d area_a = _mm256_set1_pd(area_as);
  const __m256d zero = _mm256_setzero_pd();

  const std::size_t n = out.size();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d bx1 = _mm256_loadu_pd(boxes.x1.data() + j);
    const __m256d by1 = _mm256_loadu_pd(boxes.y1.data() + j);
    const __m256d bx2 = _mm256_loadu_pd(boxes.x2.data() + j);
    const __m256d by2 = _mm256_loadu_pd(boxes.y2.data() + j);
    __m256d iw = _mm256_sub_pd(_mm256_min_pd(ax2, bx2), _mm256_max_pd(ax1, bx1));
    __m256d ih = _mm256_sub_pd(_mm256_min_pd(ay2, by2), _mm256_max_pd(ay1, by1));
    iw = _mm256_and_pd(iw, _mm256_cmp_pd(iw, zero, _CMP_GT_OQ));
    ih = _mm256_and_pd(ih, _mm256_cmp_pd(ih, zero, _CMP_GT_OQ));
    const __m256d inter = _mm256_mul_pd(iw, ih);
    const __m256d area_b =
        _mm256_mul_pd(_mm256_sub_pd(bx2, bx1), _mm256_sub_pd(by2, by1));
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(area_a, area_b), inter);
    _mm256_storeu_pd(out.data() + j, _mm256_div_pd(inter, uni));
  }
  if (j < n) {
    BoxColumns tail;
    tail.x1.assign(boxes.x1.begin() + j, boxes.x1.end());
    tail.y1.assign(boxes.y1.begin() + j, boxes.y1.end());
    tail.x2.assign(boxes.x2.begin() + j, boxes.x2.end());
    tail.y2.assign(boxes.y2.begin() + j, boxes.y2.end());
    scalar::iou_one_to_many(box, tail, out.subspan(j));
  }
}

void convolve_taps(std::span<const float> src, std::size_t stride,
                   std::span<const float> taps, std::span<float> dst) {
  assert(!taps.empty());
  assert(src.size() >= dst.size() + (taps.size() - 1) * stride);
  const std::size_t n = dst.size();
  const float* s = src.data();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_mul_ps(_mm256_set1_ps(taps[0]), _mm256_loadu_ps(s + i));
    for (std::size_t k = 1; k < taps.size(); ++k) {
      const __m256 v = _mm256_loadu_ps(s + i + k * stride);
      acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_set1_ps(taps[k]), v));
    }
    _mm256_storeu_ps(dst.data() + i, acc);
  }
  if (i < n) {
    scalar::convolve_taps(src.subspan(i), stride, taps, dst.subspan(i));
  }
}

}  // namespace detbound::simd::avx2
