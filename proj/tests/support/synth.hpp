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

// Seeded synthetic datasets, classifiers and detectors for property tests.

#include <cstdint>
#include <vector>

#include "detbound/data.hpp"

namespace detbound::testing {

struct SynthOptions {
  int images = 100;
  int categories = 10;
  int boxes = 500;
  int width = 640;
  int height = 480;
  // Same-image targets stay below this IOU with each other.
  double max_pairwise_iou = 0.5;
};

Dataset make_synthetic_dataset(std::uint64_t seed, const SynthOptions& opt = {});

// Top-1 label correct with probability `accuracy`, otherwise a uniformly
// chosen wrong category. `neighbors` extra predictions per target on boxes
// with IOU >= 0.5.
std::vector<ClassifierOutput> simulate_classifier(const Dataset& ds, double accuracy,
                                                  std::uint64_t seed,
                                                  std::size_t neighbors = 0);

struct DetectorProfile {
  double recall = 0.7;          // chance a target gets a detection
  double jitter = 0.15;         // positional noise, fraction of box size
  double duplicate_rate = 0.3;  // chance of an extra box on a detected target
  double background = 1.0;      // mean spurious boxes per image
  double wrong_class = 0.1;     // chance a detection carries another label
};

DetectorProfile random_profile(std::uint64_t seed);

std::vector<Detection> simulate_detections(const Dataset& ds, const DetectorProfile& p,
                                           std::uint64_t seed);

// Small instance for oracle comparisons: <= 10 detections, <= 5 targets,
// <= 3 categories spread over 1 to 3 images.
struct SmallInstance {
  Dataset ds;
  std::vector<Detection> dets;
};

SmallInstance make_small_instance(std::uint64_t seed);

}  // namespace detbound::testing
