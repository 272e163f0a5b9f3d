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

// Data model and ingestion of COCO-style annotations, detection results and
// per-annotation classifier outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "detbound/geom.hpp"

namespace detbound {

using ImageId = std::int64_t;
using CategoryId = std::int64_t;
using AnnotationId = std::int64_t;

enum class SizeClass { Small, Medium, Large };

std::string_view to_string(SizeClass size);

// Upper bounds (inclusive) of the small and medium buckets, in pixels^2.
struct AreaThresholds {
  double small_max = 32.0 * 32.0;
  double medium_max = 96.0 * 96.0;
};

SizeClass size_bucket(double area, const AreaThresholds& thresholds = {});

struct ImageInfo {
  ImageId id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;

  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct Category {
  CategoryId id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

struct GroundTruth {
  AnnotationId id = 0;
  ImageId image_id = 0;
  CategoryId category_id = 0;
  BBox bbox;
  double area = 0.0;
  SizeClass size_class = SizeClass::Small;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Detection {
  ImageId image_id = 0;
  CategoryId category_id = 0;
  BBox bbox;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct LabelScore {
  CategoryId label = 0;
  double confidence = 0.0;

  friend bool operator==(const LabelScore&, const LabelScore&) = default;
};

struct NeighborPrediction {
  BBox bbox;
  LabelScore prediction;

  friend bool operator==(const NeighborPrediction&,
                         const NeighborPrediction&) = default;
};

// Top-1 prediction of an object classifier run on a ground-truth box, and
// optionally on boxes sampled around it.
struct ClassifierOutput {
  AnnotationId annotation_id = 0;
  LabelScore prediction;
  std::vector<NeighborPrediction> neighbors;

  friend bool operator==(const ClassifierOutput&,
                         const ClassifierOutput&) = default;
};

struct Dataset {
  std::vector<ImageInfo> images;
  std::vector<Category> categories;
  std::vector<GroundTruth> annotations;

  const ImageInfo* find_image(ImageId id) const;
  const Category* find_category(CategoryId id) const;
  const GroundTruth* find_annotation(AnnotationId id) const;

  // Rebuilds the id lookup tables; call after mutating the vectors.
  void reindex();

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.images == b.images && a.categories == b.categories &&
           a.annotations == b.annotations;
  }

 private:
  std::unordered_map<ImageId, std::size_t> image_index_;
  std::unordered_map<CategoryId, std::size_t> category_index_;
  std::unordered_map<AnnotationId, std::size_t> annotation_index_;
};

struct LoadOptions {
  AreaThresholds area_thresholds;
  // Drop iscrowd/ignore annotations instead of rejecting the file.
  bool permissive = false;
};

// Checks id uniqueness, references and box validity; assigns size classes.
// Throws ValidationError naming the offending record.
void validate_dataset(Dataset& ds, const AreaThresholds& thresholds = {});

Dataset parse_dataset(const nlohmann::json& doc, const LoadOptions& options = {});
Dataset load_dataset(const std::filesystem::path& path,
                     const LoadOptions& options = {});
nlohmann::json dataset_to_json(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Preserves record order, which is the tie-break key for equal scores.
std::vector<Detection> parse_detections(const nlohmann::json& doc,
                                        const Dataset& ds);
std::vector<Detection> load_detections(const std::filesystem::path& path,
                                       const Dataset& ds);
nlohmann::json detections_to_json(std::span<const Detection> dets);
void save_detections(std::span<const Detection> dets,
                     const std::filesystem::path& path);

std::vector<ClassifierOutput> parse_classifier_outputs(
    const nlohmann::json& doc, const Dataset& ds);
std::vector<ClassifierOutput> load_classifier_outputs(
    const std::filesystem::path& path, const Dataset& ds);
nlohmann::json classifier_outputs_to_json(
    std::span<const ClassifierOutput> outputs);
void save_classifier_outputs(std::span<const ClassifierOutput> outputs,
                             const std::filesystem::path& path);

// Parses a whole file as JSON; ParseError on syntax errors.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace detbound
