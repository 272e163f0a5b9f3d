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

// Invariance probes: images rebuilt around their annotated objects (white or
// noise backgrounds, objects only, crops), whole-image transforms (blur,
// vertical flip), objects pasted into unrelated backgrounds, and
// context-scaled classification crops.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "detbound/data.hpp"
#include "detbound/image.hpp"

namespace detbound {

struct WhiteBackground {};
struct NoiseBackground {};
struct ObjectsOnly {};
struct CropObject {};
struct CropResize {
  int min_dim = 300;
};
struct GaussianBlur {
  int ksize = 11;
  double sigma = 2.0;
};
struct VerticalFlip {};

using ProbeSpec = std::variant<WhiteBackground, NoiseBackground, ObjectsOnly,
                               CropObject, CropResize, GaussianBlur, VerticalFlip>;

std::string_view probe_name(const ProbeSpec& spec);

// Pixels covered by a box: [floor(x), ceil(x + w)) x [floor(y), ceil(y + h)),
// clipped to the image.
PixelRect pixel_rect(const BBox& box, int image_width, int image_height);

// Normalized, symmetric 1-D Gaussian taps. ksize must be odd, sigma > 0.
std::vector<double> gaussian_kernel(int ksize, double sigma);

// Separable blur with reflect-101 borders.
Image gaussian_blur(const Image& img, int ksize, double sigma);

Image flip_vertical(const Image& img);
BBox flip_vertical(const BBox& box, int image_height);

// Single generated image with its annotations in output coordinates.
struct ProbeImage {
  Image pixels;
  std::vector<GroundTruth> annotations;
  // Set for variants that emit one image per object.
  std::optional<AnnotationId> source_annotation;
};

// Probes for one source image. `annots` must lie inside the image
// (ValidationError otherwise). `seed` drives the noise background.
std::vector<ProbeImage> generate_probe(const Image& image,
                                       std::span<const GroundTruth> annots,
                                       const ProbeSpec& spec,
                                       std::uint64_t seed = 0);

struct ManifestEntry {
  ImageId source_image_id = 0;
  std::optional<AnnotationId> source_annotation_id;
  ImageId image_id = 0;
  std::string file_name;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// Generated images, a COCO-style dataset over them and the source mapping.
// images[i] belongs to manifest[i] and dataset.images[i].
struct ProbeOutput {
  std::vector<Image> images;
  Dataset dataset;
  std::vector<ManifestEntry> manifest;
};

using ImageLoader = std::function<Image(const ImageInfo&)>;

// Runs generate_probe over every image (sorted by id). Output ids are
// assigned 1..N in manifest order; file names are "<variant>_<id>.png".
ProbeOutput generate_probe_dataset(const Dataset& ds, const ImageLoader& load,
                                   const ProbeSpec& spec, std::uint64_t seed = 0,
                                   unsigned threads = 1);

nlohmann::json manifest_to_json(std::string_view variant,
                                std::span<const ManifestEntry> manifest);

// Where a pasted object goes.
struct PlaceAt {
  int x = 0;
  int y = 0;
};
// Object center at the same relative position as in its source image.
struct PlaceSameRelativeCenter {};
// Uniform position fully inside the background.
struct PlaceRandom {
  std::uint64_t seed = 0;
};
using Placement = std::variant<PlaceAt, PlaceSameRelativeCenter, PlaceRandom>;

// Object cut from a source image, pasted at its native size.
struct PasteObject {
  Image pixels;
  GroundTruth source;
  int source_width = 0;
  int source_height = 0;
};

PasteObject cut_object(const Image& image, const GroundTruth& annotation);

struct PasteResult {
  Image image;
  GroundTruth annotation;  // id and image_id left at 0
};

// Throws ValidationError when the object does not fit in the background.
PasteResult paste_incongruent(const PasteObject& object, const Image& background,
                              const Placement& placement);

enum class PlacementRule { Random, SameRelativeCenter };

// Every object on every background: objects.size() * backgrounds.size()
// outputs, object-major. Random placements use a per-output derived seed.
ProbeOutput generate_incongruent_set(std::span<const PasteObject> objects,
                                     std::span<const Image> backgrounds,
                                     std::span<const Category> categories,
                                     PlacementRule rule, std::uint64_t seed = 0);

enum class ContextMode { ObjectOnly, ObjectPlusContext, ContextOnly, WholeImage };
enum class FillMode { Mean, Gray, White };

std::string_view to_string(ContextMode mode);
ContextMode parse_context_mode(std::string_view text);
FillMode parse_fill_mode(std::string_view text);

struct ContextScale {
  double scale = 1.0;
  ContextMode mode = ContextMode::ObjectOnly;
  FillMode fill = FillMode::Mean;
};

inline constexpr double kMinContextScale = 0.2;
inline constexpr double kMaxContextScale = 2.0;

struct CropManifestEntry {
  AnnotationId annotation_id = 0;
  std::string file_name;  // empty when skipped
  CategoryId label = 0;
  bool skipped = false;
  std::string warning;

  friend bool operator==(const CropManifestEntry&, const CropManifestEntry&) = default;
};

struct ContextCrops {
  std::vector<Image> crops;  // one per non-skipped manifest entry, in order
  std::vector<CropManifestEntry> manifest;
};

// Per-channel mean over all pixels of all images, rounded.
std::vector<std::uint8_t> mean_pixel(const Dataset& ds, const ImageLoader& load);

// One crop per annotation (ordered by annotation id) of the box scaled by
// `ctx.scale` and clipped. ContextOnly fills the unscaled box with the fill
// value; WholeImage exports the full frame. Scales outside [0.2, 2] throw
// PreconditionError; degenerate crops are skipped and noted.
ContextCrops export_context_crops(const Dataset& ds, const ImageLoader& load,
                                  const ContextScale& ctx);

nlohmann::json crop_manifest_to_json(const ContextScale& ctx,
                                     std::span<const CropManifestEntry> manifest);

}  // namespace detbound
