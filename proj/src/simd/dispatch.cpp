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
#include <atomic>
#include <stdexcept>

#include "detbound/simd/kernels.hpp"

namespace detbound::simd {

namespace {

// -1: no override.
std::atomic<int> g_forced_isa{-1};

Isa probe_cpu() {
#if defined(DETBOUND_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

Isa detected_isa() {
  static const Isa isa = probe_cpu();
  return isa;
}

Isa active_isa() {
  const int forced = g_forced_isa.load(std::memory_order_relaxed);
  if (forced < 0) return detected_isa();
  const auto want = static_cast<Isa>(forced);
  return want == Isa::Avx2 && detected_isa() != Isa::Avx2 ? Isa::Scalar : want;
}

ScopedIsa::ScopedIsa(Isa isa) {
  const int prev = g_forced_isa.exchange(static_cast<int>(isa));
  if (prev >= 0) previous_ = static_cast<Isa>(prev);
}

ScopedIsa::~ScopedIsa() {
  g_forced_isa.store(previous_ ? static_cast<int>(*previous_) : -1);
}

BoxColumns::BoxColumns(std::span<const BBox> boxes) {
  x1.reserve(boxes.size());
  y1.reserve(boxes.size());
  x2.reserve(boxes.size());
  y2.reserve(boxes.size());
  for (const auto& b : boxes) {
    x1.push_back(b.x);
    y1.push_back(b.y);
    x2.push_back(b.x + b.w);
    y2.push_back(b.y + b.h);
  }
}

void iou_one_to_many(const BBox& box, const BoxColumns& boxes,
                     std::span<double> out) {
  if (out.size() != boxes.size()) {
    throw std::invalid_argument("iou_one_to_many: output size mismatch");
  }
#if defined(DETBOUND_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::iou_one_to_many(box, boxes, out);
#endif
  scalar::iou_one_to_many(box, boxes, out);
}

std::vector<double> iou_matrix(std::span<const BBox> dets,
                               std::span<const BBox> gts) {
  std::vector<double> m(dets.size() * gts.size());
  if (m.empty()) return m;
  const BoxColumns columns(gts);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    iou_one_to_many(dets[d], columns,
                    std::span<double>(m).subspan(d * gts.size(), gts.size()));
  }
  return m;
}

void convolve_taps(std::span<const float> src, std::size_t stride,
                   std::span<const float> taps, std::span<float> dst) {
  if (taps.empty() ||
      src.size() < dst.size() + (taps.size() - 1) * stride) {
    throw std::invalid_argument("convolve_taps: source too short");
  }
#if defined(DETBOUND_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::convolve_taps(src, stride, taps, dst);
#endif
  scalar::convolve_taps(src, stride, taps, dst);
}

}  // namespace detbound::simd
