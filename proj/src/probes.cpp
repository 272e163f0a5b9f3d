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
#include "detbound/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "detbound/error.hpp"
#include "detbound/parallel.hpp"
#include "detbound/random.hpp"
#include "detbound/simd/kernels.hpp"

namespace detbound {

namespace {

constexpr double kBoundsSlack = 1e-6;

void check_inside(const GroundTruth& a, const Image& img) {
  const auto& b = a.bbox;
  if (!b.valid() || b.x < -kBoundsSlack || b.y < -kBoundsSlack ||
      b.right() > img.width() + kBoundsSlack ||
      b.bottom() > img.height() + kBoundsSlack) {
    throw ValidationError(
        fmt::format("annotation {}: box lies outside its image", a.id));
  }
}

void copy_rect(const Image& src, Image& dst, const PixelRect& r) {
  for (int y = r.y0; y < r.y1; ++y) {
    const std::size_t off = static_cast<std::size_t>(r.x0) * src.channels();
    std::copy_n(src.row(y).data() + off,
                static_cast<std::size_t>(r.width()) * src.channels(),
                dst.row(y).data() + off);
  }
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

BBox full_box(const Image& img) {
  return BBox{0.0, 0.0, static_cast<double>(img.width()),
              static_cast<double>(img.height())};
}

}  // namespace

std::string_view probe_name(const ProbeSpec& spec) {
  struct Visitor {
    std::string_view operator()(const WhiteBackground&) const { return "white_bg"; }
    std::string_view operator()(const NoiseBackground&) const { return "noise_bg"; }
    std::string_view operator()(const ObjectsOnly&) const { return "objects_only"; }
    std::string_view operator()(const CropObject&) const { return "crop"; }
    std::string_view operator()(const CropResize&) const { return "crop_resize"; }
    std::string_view operator()(const GaussianBlur&) const { return "gaussian_blur"; }
    std::string_view operator()(const VerticalFlip&) const { return "vertical_flip"; }
  };
  return std::visit(Visitor{}, spec);
}

PixelRect pixel_rect(const BBox& box, int image_width, int image_height) {
  PixelRect r;
  r.x0 = std::clamp(static_cast<int>(std::floor(box.x)), 0, image_width);
  r.y0 = std::clamp(static_cast<int>(std::floor(box.y)), 0, image_height);
  r.x1 = std::clamp(static_cast<int>(std::ceil(box.right())), 0, image_width);
  r.y1 = std::clamp(static_cast<int>(std::ceil(box.bottom())), 0, image_height);
  return r;
}

std::vector<double> gaussian_kernel(int ksize, double sigma) {
  if (ksize <= 0 || ksize % 2 == 0) {
    throw PreconditionError("gaussian_kernel: ksize must be odd and positive");
  }
  if (!(sigma > 0.0)) throw PreconditionError("gaussian_kernel: sigma must be positive");
  const int r = ksize / 2;
  std::vector<double> k(ksize);
  for (int i = 0; i < ksize; ++i) {
    const double d = static_cast<double>(i - r);
    k[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  // Sum symmetric pairs from the outside in so k stays exactly symmetric.
  double sum = k[r];
  for (int i = 0; i < r; ++i) sum += 2.0 * k[i];
  for (int i = 0; i <= r; ++i) {
    k[i] /= sum;
    k[ksize - 1 - i] = k[i];
  }
  return k;
}

Image gaussian_blur(const Image& img, int ksize, double sigma) {
  const auto kd = gaussian_kernel(ksize, sigma);
  const std::vector<float> taps(kd.begin(), kd.end());
  const int r = ksize / 2;
  const int w = img.width();
  const int h = img.height();
  const int c = img.channels();
  const std::size_t row_len = static_cast<std::size_t>(w) * c;

  // Horizontal pass into rows padded vertically by r on each side.
  std::vector<float> horiz((static_cast<std::size_t>(h) + 2 * r) * row_len);
  std::vector<float> padded_row((static_cast<std::size_t>(w) + 2 * r) * c);
  for (int y = 0; y < h; ++y) {
    const auto src = img.row(y);
    for (int x = -r; x < w + r; ++x) {
      const int sx = reflect101(x, w);
      for (int ch = 0; ch < c; ++ch) {
        padded_row[static_cast<std::size_t>(x + r) * c + ch] =
            src[static_cast<std::size_t>(sx) * c + ch];
      }
    }
    simd::convolve_taps(padded_row, static_cast<std::size_t>(c), taps,
                        std::span<float>(horiz).subspan((y + r) * row_len, row_len));
  }
  for (int y = -r; y < 0; ++y) {
    std::copy_n(horiz.begin() + (reflect101(y, h) + r) * row_len, row_len,
                horiz.begin() + (y + r) * row_len);
  }
  for (int y = h; y < h + r; ++y) {
    std::copy_n(horiz.begin() + (reflect101(y, h) + r) * row_len, row_len,
                horiz.begin() + (y + r) * row_len);
  }

  std::vector<float> vert(static_cast<std::size_t>(h) * row_len);
  simd::convolve_taps(horiz, row_len, taps, vert);

  Image out(w, h, c);
  auto& px = out.pixels();
  for (std::size_t i = 0; i < vert.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(vert[i], 0.0f, 255.0f)));
  }
  return out;
}

Image flip_vertical(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    const auto src = img.row(img.height() - 1 - y);
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

BBox flip_vertical(const BBox& box, int image_height) {
  return BBox{box.x, image_height - box.y - box.h, box.w, box.h};
}

std::vector<ProbeImage> generate_probe(const Image& image,
                                       std::span<const GroundTruth> annots,
                                       const ProbeSpec& spec, std::uint64_t seed) {
  for (const auto& a : annots) check_inside(a, image);
  std::vector<ProbeImage> out;

  auto one_per_object = [&](auto&& make_background) {
    for (const auto& a : annots) {
      Image img = make_background(a);
      copy_rect(image, img, pixel_rect(a.bbox, image.width(), image.height()));
      out.push_back({std::move(img), {a}, a.id});
    }
  };

  auto crop_object = [&](const GroundTruth& a) {
    return crop(image, pixel_rect(a.bbox, image.width(), image.height()));
  };

  if (std::holds_alternative<WhiteBackground>(spec)) {
    one_per_object([&](const GroundTruth&) {
      return Image(image.width(), image.height(), image.channels(), 255);
    });
  } else if (std::holds_alternative<NoiseBackground>(spec)) {
    one_per_object([&](const GroundTruth& a) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(a.id)));
      Image img(image.width(), image.height(), image.channels());
      for (auto& p : img.pixels()) p = uniform_byte(rng);
      return img;
    });
  } else if (std::holds_alternative<ObjectsOnly>(spec)) {
    Image img(image.width(), image.height(), image.channels(), 255);
    for (const auto& a : annots) {
      copy_rect(image, img, pixel_rect(a.bbox, image.width(), image.height()));
    }
    out.push_back({std::move(img), {annots.begin(), annots.end()}, std::nullopt});
  } else if (std::holds_alternative<CropObject>(spec)) {
    for (const auto& a : annots) {
      Image img = crop_object(a);
      GroundTruth g = a;
      g.bbox = full_box(img);
      g.area = g.bbox.area();
      out.push_back({std::move(img), {g}, a.id});
    }
  } else if (const auto* cr = std::get_if<CropResize>(&spec)) {
    if (cr->min_dim <= 0) throw PreconditionError("crop_resize: min_dim must be positive");
    for (const auto& a : annots) {
      if (a.bbox.w < 1.0 || a.bbox.h < 1.0) {
        throw ValidationError(
            fmt::format("annotation {}: degenerate box for crop_resize", a.id));
      }
      const double scale = cr->min_dim / std::min(a.bbox.w, a.bbox.h);
      int out_w = cr->min_dim;
      int out_h = cr->min_dim;
      if (a.bbox.w <= a.bbox.h) {
        out_h = static_cast<int>(std::lround(a.bbox.h * scale));
      } else {
        out_w = static_cast<int>(std::lround(a.bbox.w * scale));
      }
      Image img = resize_bilinear(crop_object(a), out_w, out_h);
      GroundTruth g = a;
      g.bbox = full_box(img);
      g.area = g.bbox.area();
      out.push_back({std::move(img), {g}, a.id});
    }
  } else if (const auto* gb = std::get_if<GaussianBlur>(&spec)) {
    out.push_back({gaussian_blur(image, gb->ksize, gb->sigma),
                   {annots.begin(), annots.end()}, std::nullopt});
  } else if (std::holds_alternative<VerticalFlip>(spec)) {
    std::vector<GroundTruth> flipped(annots.begin(), annots.end());
    for (auto& g : flipped) g.bbox = flip_vertical(g.bbox, image.height());
    out.push_back({flip_vertical(image), std::move(flipped), std::nullopt});
  }
  return out;
}

ProbeOutput generate_probe_dataset(const Dataset& ds, const ImageLoader& load,
                                   const ProbeSpec& spec, std::uint64_t seed,
                                   unsigned threads) {
  std::vector<const ImageInfo*> images;
  for (const auto& img : ds.images) images.push_back(&img);
  std::stable_sort(images.begin(), images.end(),
                   [](const ImageInfo* a, const ImageInfo* b) { return a->id < b->id; });

  std::vector<std::vector<const GroundTruth*>> per_image(images.size());
  {
    std::unordered_map<ImageId, std::size_t> slot;
    for (std::size_t i = 0; i < images.size(); ++i) slot[images[i]->id] = i;
    for (const auto& a : ds.annotations) per_image[slot.at(a.image_id)].push_back(&a);
    for (auto& v : per_image) {
      std::stable_sort(v.begin(), v.end(), [](const GroundTruth* a, const GroundTruth* b) {
        return a->id < b->id;
      });
    }
  }

  std::vector<std::vector<ProbeImage>> generated(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    std::vector<GroundTruth> annots;
    for (const auto* a : per_image[i]) annots.push_back(*a);
    const Image src = load(*images[i]);
    if (src.width() != images[i]->width || src.height() != images[i]->height) {
      throw ValidationError(fmt::format("image {}: pixel size differs from annotation",
                                        images[i]->id));
    }
    generated[i] = generate_probe(src, annots, spec,
                                  derive_seed(seed, static_cast<std::uint64_t>(images[i]->id)));
  });

  ProbeOutput out;
  out.dataset.categories = ds.categories;
  const auto variant = probe_name(spec);
  ImageId next_id = 1;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (auto& p : generated[i]) {
      const ImageId id = next_id++;
      const auto file = fmt::format("{}_{:06d}.png", variant, id);
      out.dataset.images.push_back({id, p.pixels.width(), p.pixels.height(), file});
      for (auto g : p.annotations) {
        g.image_id = id;
        out.dataset.annotations.push_back(g);
      }
      out.manifest.push_back({images[i]->id, p.source_annotation, id, file});
      out.images.push_back(std::move(p.pixels));
    }
  }
  validate_dataset(out.dataset);
  return out;
}

nlohmann::json manifest_to_json(std::string_view variant,
                                std::span<const ManifestEntry> manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest) {
    entries.push_back({{"source_image_id", e.source_image_id},
                       {"source_annotation_id",
                        e.source_annotation_id ? nlohmann::json(*e.source_annotation_id)
                                               : nlohmann::json(nullptr)},
                       {"image_id", e.image_id},
                       {"file_name", e.file_name}});
  }
  return {{"variant", variant}, {"entries", std::move(entries)}};
}

PasteObject cut_object(const Image& image, const GroundTruth& annotation) {
  check_inside(annotation, image);
  return {crop(image, pixel_rect(annotation.bbox, image.width(), image.height())),
          annotation, image.width(), image.height()};
}

PasteResult paste_incongruent(const PasteObject& object, const Image& background,
                              const Placement& placement) {
  const int w = object.pixels.width();
  const int h = object.pixels.height();
  if (w > background.width() || h > background.height()) {
    throw ValidationError(fmt::format(
        "annotation {}: object {}x{} larger than background {}x{}",
        object.source.id, w, h, background.width(), background.height()));
  }
  if (object.pixels.channels() != background.channels()) {
    throw ValidationError("paste: object and background channel counts differ");
  }
  int x = 0;
  int y = 0;
  if (const auto* at = std::get_if<PlaceAt>(&placement)) {
    x = at->x;
    y = at->y;
    if (x < 0 || y < 0 || x + w > background.width() || y + h > background.height()) {
      throw ValidationError("paste: placement puts the object outside the background");
    }
  } else if (std::holds_alternative<PlaceSameRelativeCenter>(placement)) {
    const double rel_x = object.source.bbox.center_x() / object.source_width;
    const double rel_y = object.source.bbox.center_y() / object.source_height;
    x = static_cast<int>(std::lround(rel_x * background.width() - 0.5 * w));
    y = static_cast<int>(std::lround(rel_y * background.height() - 0.5 * h));
    x = std::clamp(x, 0, background.width() - w);
    y = std::clamp(y, 0, background.height() - h);
  } else if (const auto* rnd = std::get_if<PlaceRandom>(&placement)) {
    Rng rng(rnd->seed);
    x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(background.width() - w + 1)));
    y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(background.height() - h + 1)));
  }
  PasteResult r{background, object.source};
  paste(r.image, object.pixels, x, y);
  r.annotation.id = 0;
  r.annotation.image_id = 0;
  r.annotation.bbox = BBox{static_cast<double>(x), static_cast<double>(y),
                           static_cast<double>(w), static_cast<double>(h)};
  r.annotation.area = r.annotation.bbox.area();
  return r;
}

ProbeOutput generate_incongruent_set(std::span<const PasteObject> objects,
                                     std::span<const Image> backgrounds,
                                     std::span<const Category> categories,
                                     PlacementRule rule, std::uint64_t seed) {
  ProbeOutput out;
  out.dataset.categories.assign(categories.begin(), categories.end());
  ImageId next_id = 1;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    for (std::size_t b = 0; b < backgrounds.size(); ++b) {
      const ImageId id = next_id++;
      Placement placement = PlaceSameRelativeCenter{};
      if (rule == PlacementRule::Random) {
        placement = PlaceRandom{derive_seed(seed, o * backgrounds.size() + b)};
      }
      auto r = paste_incongruent(objects[o], backgrounds[b], placement);
      const auto file = fmt::format("incongruent_{:06d}.png", id);
      out.dataset.images.push_back({id, r.image.width(), r.image.height(), file});
      r.annotation.id = id;
      r.annotation.image_id = id;
      out.dataset.annotations.push_back(r.annotation);
      out.manifest.push_back({objects[o].source.image_id, objects[o].source.id, id, file});
      out.images.push_back(std::move(r.image));
    }
  }
  validate_dataset(out.dataset);
  return out;
}

std::string_view to_string(ContextMode mode) {
  switch (mode) {
    case ContextMode::ObjectOnly: return "object_only";
    case ContextMode::ObjectPlusContext: return "object_plus_context";
    case ContextMode::ContextOnly: return "context_only";
    case ContextMode::WholeImage: return "whole_image";
  }
  return "?";
}

ContextMode parse_context_mode(std::string_view text) {
  for (auto m : {ContextMode::ObjectOnly, ContextMode::ObjectPlusContext,
                 ContextMode::ContextOnly, ContextMode::WholeImage}) {
    if (text == to_string(m)) return m;
  }
  throw PreconditionError(fmt::format("unknown context mode '{}'", text));
}

FillMode parse_fill_mode(std::string_view text) {
  if (text == "mean") return FillMode::Mean;
  if (text == "gray") return FillMode::Gray;
  if (text == "white") return FillMode::White;
  throw PreconditionError(fmt::format("unknown fill mode '{}'", text));
}

std::vector<std::uint8_t> mean_pixel(const Dataset& ds, const ImageLoader& load) {
  std::vector<double> sum;
  double count = 0.0;
  for (const auto& info : ds.images) {
    const Image img = load(info);
    if (sum.empty()) sum.assign(img.channels(), 0.0);
    if (static_cast<int>(sum.size()) != img.channels()) {
      throw ValidationError("mean_pixel: images differ in channel count");
    }
    const auto& px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) sum[i % sum.size()] += px[i];
    count += static_cast<double>(img.width()) * img.height();
  }
  std::vector<std::uint8_t> mean;
  for (double s : sum) {
    mean.push_back(static_cast<std::uint8_t>(std::lround(s / count)));
  }
  return mean;
}

ContextCrops export_context_crops(const Dataset& ds, const ImageLoader& load,
                                  const ContextScale& ctx) {
  if (ctx.mode != ContextMode::WholeImage &&
      !(ctx.scale >= kMinContextScale && ctx.scale <= kMaxContextScale)) {
    throw PreconditionError(fmt::format(
        "context scale {} outside [{}, {}]", ctx.scale, kMinContextScale, kMaxContextScale));
  }
  std::vector<std::uint8_t> fill;
  if (ctx.mode == ContextMode::ContextOnly && ctx.fill == FillMode::Mean) {
    fill = mean_pixel(ds, load);
  }

  std::vector<const GroundTruth*> anns;
  for (const auto& a : ds.annotations) anns.push_back(&a);
  std::stable_sort(anns.begin(), anns.end(), [](const GroundTruth* a, const GroundTruth* b) {
    return a->id < b->id;
  });

  ContextCrops out;
  ImageId cached_id = 0;
  Image cached;
  for (const auto* a : anns) {
    const auto* info = ds.find_image(a->image_id);
    if (cached.empty() || cached_id != a->image_id) {
      cached = load(*info);
      cached_id = a->image_id;
    }
    CropManifestEntry entry;
    entry.annotation_id = a->id;
    entry.label = a->category_id;
    Image img;
    try {
      if (ctx.mode == ContextMode::WholeImage) {
        img = cached;
      } else {
        const BBox scaled = scale_box(a->bbox, ctx.scale, cached.width(), cached.height());
        const auto rect = pixel_rect(scaled, cached.width(), cached.height());
        if (rect.empty()) throw ValidationError("degenerate crop");
        img = crop(cached, rect);
        if (ctx.mode == ContextMode::ContextOnly) {
          std::vector<std::uint8_t> value(img.channels(), 255);
          if (ctx.fill == FillMode::Gray) value.assign(img.channels(), 128);
          if (ctx.fill == FillMode::Mean) value = fill;
          const auto inner = pixel_rect(a->bbox, cached.width(), cached.height());
          const int x0 = std::max(inner.x0, rect.x0) - rect.x0;
          const int y0 = std::max(inner.y0, rect.y0) - rect.y0;
          const int x1 = std::min(inner.x1, rect.x1) - rect.x0;
          const int y1 = std::min(inner.y1, rect.y1) - rect.y0;
          for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
              for (int c = 0; c < img.channels(); ++c) img.at(x, y, c) = value[c];
            }
          }
        }
      }
    } catch (const ValidationError& e) {
      entry.skipped = true;
      entry.warning = e.what();
      out.manifest.push_back(std::move(entry));
      continue;
    }
    entry.file_name = fmt::format("crop_{}_{}.png", to_string(ctx.mode), a->id);
    out.manifest.push_back(std::move(entry));
    out.crops.push_back(std::move(img));
  }
  return out;
}

nlohmann::json crop_manifest_to_json(const ContextScale& ctx,
                                     std::span<const CropManifestEntry> manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest) {
    nlohmann::json rec = {{"annotation_id", e.annotation_id}, {"label", e.label}};
    if (e.skipped) {
      rec["skipped"] = true;
      rec["warning"] = e.warning;
    } else {
      rec["file_name"] = e.file_name;
    }
    entries.push_back(std::move(rec));
  }
  return {{"mode", to_string(ctx.mode)}, {"scale", ctx.scale}, {"entries", std::move(entries)}};
}

}  // namespace detbound
