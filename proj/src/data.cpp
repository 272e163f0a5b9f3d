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
#include "detbound/data.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "detbound/error.hpp"

namespace detbound {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, std::string_view what) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(fmt::format("{}: missing field '{}'", what, key));
  }
  return *it;
}

std::int64_t as_id(const json& v, std::string_view what) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9.0e15) {
      return static_cast<std::int64_t>(d);
    }
  }
  throw ParseError(fmt::format("{}: expected an integer id", what));
}

double as_number(const json& v, std::string_view what) {
  if (!v.is_number()) {
    throw ParseError(fmt::format("{}: expected a number", what));
  }
  return v.get<double>();
}

BBox as_bbox(const json& v, std::string_view what) {
  if (!v.is_array() || v.size() != 4) {
    throw ParseError(fmt::format("{}: bbox must be [x, y, w, h]", what));
  }
  return BBox{as_number(v[0], what), as_number(v[1], what),
              as_number(v[2], what), as_number(v[3], what)};
}

bool truthy_flag(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_number()) return it->get<double>() != 0.0;
  throw ParseError(fmt::format("annotation: field '{}' must be 0/1", key));
}

json bbox_to_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

std::string_view to_string(SizeClass size) {
  switch (size) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "?";
}

SizeClass size_bucket(double area, const AreaThresholds& thresholds) {
  if (area <= thresholds.small_max) return SizeClass::Small;
  if (area <= thresholds.medium_max) return SizeClass::Medium;
  return SizeClass::Large;
}

const ImageInfo* Dataset::find_image(ImageId id) const {
  auto it = image_index_.find(id);
  return it == image_index_.end() ? nullptr : &images[it->second];
}

const Category* Dataset::find_category(CategoryId id) const {
  auto it = category_index_.find(id);
  return it == category_index_.end() ? nullptr : &categories[it->second];
}

const GroundTruth* Dataset::find_annotation(AnnotationId id) const {
  auto it = annotation_index_.find(id);
  return it == annotation_index_.end() ? nullptr : &annotations[it->second];
}

void Dataset::reindex() {
  image_index_.clear();
  category_index_.clear();
  annotation_index_.clear();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!image_index_.emplace(images[i].id, i).second) {
      throw ValidationError(fmt::format("duplicate image id {}", images[i].id));
    }
  }
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (!category_index_.emplace(categories[i].id, i).second) {
      throw ValidationError(
          fmt::format("duplicate category id {}", categories[i].id));
    }
  }
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (!annotation_index_.emplace(annotations[i].id, i).second) {
      throw ValidationError(
          fmt::format("duplicate annotation id {}", annotations[i].id));
    }
  }
}

void validate_dataset(Dataset& ds, const AreaThresholds& thresholds) {
  ds.reindex();
  for (const auto& img : ds.images) {
    if (img.width <= 0 || img.height <= 0) {
      throw ValidationError(
          fmt::format("image {}: width and height must be positive", img.id));
    }
  }
  for (auto& ann : ds.annotations) {
    if (ds.find_image(ann.image_id) == nullptr) {
      throw ValidationError(fmt::format(
          "annotation {}: unknown image_id {}", ann.id, ann.image_id));
    }
    if (ds.find_category(ann.category_id) == nullptr) {
      throw ValidationError(fmt::format(
          "annotation {}: unknown category_id {}", ann.id, ann.category_id));
    }
    if (!ann.bbox.valid()) {
      throw ValidationError(
          fmt::format("annotation {}: bbox must have positive size", ann.id));
    }
    if (!(std::isfinite(ann.area) && ann.area > 0.0)) {
      throw ValidationError(
          fmt::format("annotation {}: area must be positive", ann.id));
    }
    ann.size_class = size_bucket(ann.area, thresholds);
  }
}

Dataset parse_dataset(const json& doc, const LoadOptions& options) {
  if (!doc.is_object()) throw ParseError("annotation file: expected an object");
  static const json kEmpty = json::array();
  auto array_field = [&](const char* key) -> const json& {
    auto it = doc.find(key);
    if (it == doc.end()) return kEmpty;
    if (!it->is_array()) {
      throw ParseError(fmt::format("annotation file: '{}' must be an array", key));
    }
    return *it;
  };

  Dataset ds;
  for (const auto& rec : array_field("images")) {
    ImageInfo img;
    img.id = as_id(require(rec, "id", "image"), "image.id");
    const auto what = fmt::format("image {}", img.id);
    img.width = static_cast<int>(as_id(require(rec, "width", what), what));
    img.height = static_cast<int>(as_id(require(rec, "height", what), what));
    if (auto it = rec.find("file_name"); it != rec.end()) {
      if (!it->is_string()) throw ParseError(what + ": file_name must be a string");
      img.file_name = it->get<std::string>();
    }
    ds.images.push_back(std::move(img));
  }
  for (const auto& rec : array_field("categories")) {
    Category cat;
    cat.id = as_id(require(rec, "id", "category"), "category.id");
    if (auto it = rec.find("name"); it != rec.end()) {
      if (!it->is_string()) {
        throw ParseError(fmt::format("category {}: name must be a string", cat.id));
      }
      cat.name = it->get<std::string>();
    }
    ds.categories.push_back(std::move(cat));
  }
  for (const auto& rec : array_field("annotations")) {
    GroundTruth gt;
    gt.id = as_id(require(rec, "id", "annotation"), "annotation.id");
    const auto what = fmt::format("annotation {}", gt.id);
    if (truthy_flag(rec, "iscrowd") || truthy_flag(rec, "ignore")) {
      if (options.permissive) continue;
      throw ValidationError(what + ": crowd/ignore annotations are not supported");
    }
    gt.image_id = as_id(require(rec, "image_id", what), what);
    gt.category_id = as_id(require(rec, "category_id", what), what);
    gt.bbox = as_bbox(require(rec, "bbox", what), what);
    auto area = rec.find("area");
    gt.area = (area == rec.end() || area->is_null()) ? gt.bbox.w * gt.bbox.h
                                                     : as_number(*area, what);
    ds.annotations.push_back(gt);
  }
  validate_dataset(ds, options.area_thresholds);
  return ds;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

Dataset load_dataset(const std::filesystem::path& path,
                     const LoadOptions& options) {
  return parse_dataset(read_json_file(path), options);
}

json dataset_to_json(const Dataset& ds) {
  json images = json::array();
  for (const auto& img : ds.images) {
    images.push_back({{"id", img.id},
                      {"width", img.width},
                      {"height", img.height},
                      {"file_name", img.file_name}});
  }
  json categories = json::array();
  for (const auto& cat : ds.categories) {
    categories.push_back({{"id", cat.id}, {"name", cat.name}});
  }
  json annotations = json::array();
  for (const auto& ann : ds.annotations) {
    annotations.push_back({{"id", ann.id},
                           {"image_id", ann.image_id},
                           {"category_id", ann.category_id},
                           {"bbox", bbox_to_json(ann.bbox)},
                           {"area", ann.area}});
  }
  return json{{"images", std::move(images)},
              {"categories", std::move(categories)},
              {"annotations", std::move(annotations)}};
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_text_file(path, dataset_to_json(ds).dump() + "\n");
}

std::vector<Detection> parse_detections(const json& doc, const Dataset& ds) {
  if (!doc.is_array()) throw ParseError("detection file: expected an array");
  std::vector<Detection> dets;
  dets.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    const auto what = fmt::format("detection #{}", i);
    if (!rec.is_object()) throw ParseError(what + ": expected an object");
    Detection d;
    d.image_id = as_id(require(rec, "image_id", what), what);
    d.category_id = as_id(require(rec, "category_id", what), what);
    d.bbox = as_bbox(require(rec, "bbox", what), what);
    d.score = as_number(require(rec, "score", what), what);
    if (ds.find_image(d.image_id) == nullptr) {
      throw ValidationError(
          fmt::format("{}: unknown image_id {}", what, d.image_id));
    }
    if (ds.find_category(d.category_id) == nullptr) {
      throw ValidationError(
          fmt::format("{}: unknown category_id {}", what, d.category_id));
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError(
          fmt::format("{}: score {} outside [0, 1]", what, d.score));
    }
    if (!d.bbox.valid()) {
      throw ValidationError(what + ": bbox must have positive size");
    }
    dets.push_back(d);
  }
  return dets;
}

std::vector<Detection> load_detections(const std::filesystem::path& path,
                                       const Dataset& ds) {
  return parse_detections(read_json_file(path), ds);
}

json detections_to_json(std::span<const Detection> dets) {
  json out = json::array();
  for (const auto& d : dets) {
    out.push_back({{"image_id", d.image_id},
                   {"category_id", d.category_id},
                   {"bbox", bbox_to_json(d.bbox)},
                   {"score", d.score}});
  }
  return out;
}

void save_detections(std::span<const Detection> dets,
                     const std::filesystem::path& path) {
  write_text_file(path, detections_to_json(dets).dump() + "\n");
}

namespace {

LabelScore parse_label_score(const json& rec, const Dataset& ds,
                             const std::string& what) {
  LabelScore p;
  p.label = as_id(require(rec, "label", what), what);
  p.confidence = as_number(require(rec, "confidence", what), what);
  if (ds.find_category(p.label) == nullptr) {
    throw ValidationError(fmt::format("{}: unknown label {}", what, p.label));
  }
  if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
    throw ValidationError(
        fmt::format("{}: confidence {} outside [0, 1]", what, p.confidence));
  }
  return p;
}

}  // namespace

std::vector<ClassifierOutput> parse_classifier_outputs(const json& doc,
                                                       const Dataset& ds) {
  if (!doc.is_array()) throw ParseError("classifier file: expected an array");
  std::vector<ClassifierOutput> outputs;
  std::unordered_set<AnnotationId> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    auto what = fmt::format("classifier output #{}", i);
    if (!rec.is_object()) throw ParseError(what + ": expected an object");
    ClassifierOutput out;
    out.annotation_id = as_id(require(rec, "annotation_id", what), what);
    what = fmt::format("classifier output for annotation {}", out.annotation_id);
    if (ds.find_annotation(out.annotation_id) == nullptr) {
      throw ValidationError(what + ": unknown annotation_id");
    }
    if (!seen.insert(out.annotation_id).second) {
      throw ValidationError(what + ": duplicate annotation_id");
    }
    out.prediction = parse_label_score(rec, ds, what);
    if (auto it = rec.find("neighbors"); it != rec.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(what + ": neighbors must be an array");
      for (const auto& nb : *it) {
        NeighborPrediction n;
        n.bbox = as_bbox(require(nb, "bbox", what), what);
        if (!n.bbox.valid()) {
          throw ValidationError(what + ": neighbor bbox must have positive size");
        }
        n.prediction = parse_label_score(nb, ds, what);
        out.neighbors.push_back(n);
      }
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

std::vector<ClassifierOutput> load_classifier_outputs(
    const std::filesystem::path& path, const Dataset& ds) {
  return parse_classifier_outputs(read_json_file(path), ds);
}

json classifier_outputs_to_json(std::span<const ClassifierOutput> outputs) {
  json out = json::array();
  for (const auto& o : outputs) {
    json rec = {{"annotation_id", o.annotation_id},
                {"label", o.prediction.label},
                {"confidence", o.prediction.confidence}};
    if (!o.neighbors.empty()) {
      json nbs = json::array();
      for (const auto& n : o.neighbors) {
        nbs.push_back({{"bbox", bbox_to_json(n.bbox)},
                       {"label", n.prediction.label},
                       {"confidence", n.prediction.confidence}});
      }
      rec["neighbors"] = std::move(nbs);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_classifier_outputs(std::span<const ClassifierOutput> outputs,
                             const std::filesystem::path& path) {
  write_text_file(path, classifier_outputs_to_json(outputs).dump() + "\n");
}

}  // namespace detbound
