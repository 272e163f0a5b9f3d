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

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
// The variant is chosen once at runtime from CPUID; both produce bitwise
// identical results (no FMA contraction, identical operation order).

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "detbound/geom.hpp"

namespace detbound::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

// Best instruction set compiled in and supported by this CPU.
Isa detected_isa();

// Instruction set used by the dispatching entry points.
Isa active_isa();

// Pins dispatch to `isa` (clamped to what is available) until destroyed.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  std::optional<Isa> previous_;
};

// Structure-of-arrays copy of a box list, edges precomputed.
struct BoxColumns {
  std::vector<double> x1, y1, x2, y2;

  BoxColumns() = default;
  explicit BoxColumns(std::span<const BBox> boxes);
  std::size_t size() const { return x1.size(); }
};

// out[j] = iou(box, boxes[j]); out.size() must equal boxes.size().
void iou_one_to_many(const BBox& box, const BoxColumns& boxes,
                     std::span<double> out);

// Row-major dets x gts IOU matrix.
std::vector<double> iou_matrix(std::span<const BBox> dets,
                               std::span<const BBox> gts);

// dst[i] = sum_k taps[k] * src[i + k * stride], for i in [0, dst.size()).
// src must hold dst.size() + (taps.size() - 1) * stride elements.
void convolve_taps(std::span<const float> src, std::size_t stride,
                   std::span<const float> taps, std::span<float> dst);

namespace scalar {
void iou_one_to_many(const BBox& box, const BoxColumns& boxes,
                     std::span<double> out);
void convolve_taps(std::span<const float> src, std::size_t stride,
                   std::span<const float> taps, std::span<float> dst);
}  // namespace scalar

#if defined(DETBOUND_HAVE_AVX2)
namespace avx2 {
void iou_one_to_many(const BBox& box, const BoxColumns& boxes,
                     std::span<double> out);
void convolve_taps(std::span<const float> src, std::size_t stride,
                   std::span<const float> taps, std::span<float> dst);
}  // namespace avx2
#endif

}  // namespace detbound::simd
