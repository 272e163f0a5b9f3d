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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "detbound/error.hpp"
#include "detbound/image.hpp"
#include "detbound/random.hpp"
#include "support/temp_dir.hpp"

namespace detbound {
namespace {

Image textured(int w, int h, int c, std::uint64_t seed) {
  Image img(w, h, c);
  Rng rng(seed);
  for (auto& p : img.pixels()) p = uniform_byte(rng);
  return img;
}

GroundTruth gt(AnnotationId id, ImageId img, CategoryId cat, BBox b) {
  return {id, img, cat, b, b.area(), size_bucket(b.area())};
}

TEST(GaussianKernel, SumsToOneAndSymmetric) {
  for (double sigma : {0.5, 1.0, 2.0, 5.0, 20.0}) {
    const auto k = gaussian_kernel(11, sigma);
    ASSERT_EQ(k.size(), 11u);
    EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(k[i], k[10 - i]);
    for (int i = 0; i < 5; ++i) EXPECT_LE(k[i], k[i + 1]);
  }
  EXPECT_THROW(gaussian_kernel(10, 2.0), PreconditionError);
  EXPECT_THROW(gaussian_kernel(11, 0.0), PreconditionError);
}

TEST(GaussianBlur, ConstantImageUnchangedAndSizePreserved) {
  const Image flat(37, 23, 3, 90);
  EXPECT_EQ(gaussian_blur(flat, 11, 2.0), flat);
  const Image noisy = textured(40, 30, 1, 1);
  const Image blurred = gaussian_blur(noisy, 11, 2.0);
  EXPECT_EQ(blurred.width(), 40);
  EXPECT_EQ(blurred.height(), 30);
  // Blur reduces pixel variance on noise.
  auto variance = [](const Image& im) {
    double m = 0, v = 0;
    for (auto p : im.pixels()) m += p;
    m /= im.pixels().size();
    for (auto p : im.pixels()) v += (p - m) * (p - m);
    return v / im.pixels().size();
  };
  EXPECT_LT(variance(blurred), variance(noisy) / 4);
}

TEST(GaussianBlur, ImpulseResponseIsSeparableKernel) {
  Image img(21, 21, 1, 0);
  img.at(10, 10, 0) = 255;
  const Image out = gaussian_blur(img, 5, 1.0);
  const auto k = gaussian_kernel(5, 1.0);
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      EXPECT_NEAR(out.at(10 + dx, 10 + dy, 0), 255.0 * k[dx + 2] * k[dy + 2], 0.5 + 1e-6);
    }
  }
  EXPECT_EQ(out.at(0, 0, 0), 0);
}

TEST(VerticalFlip, InvolutionAndRemap) {
  const Image img = textured(31, 17, 3, 2);
  EXPECT_EQ(flip_vertical(flip_vertical(img)), img);
  EXPECT_EQ(flip_vertical(BBox{3, 2, 5, 4}, 17), (BBox{3, 11, 5, 4}));
  const BBox b{1.5, 2.25, 7, 3.5};
  EXPECT_EQ(flip_vertical(flip_vertical(b, 17), 17), b);
}

TEST(VerticalFlip, ObjectPixelsLandUnderRemappedBox) {
  Image img(20, 10, 1, 0);
  for (int y = 2; y < 5; ++y) {
    for (int x = 3; x < 8; ++x) img.at(x, y, 0) = 200;
  }
  const std::vector<GroundTruth> a{gt(1, 1, 1, {3, 2, 5, 3})};
  const auto out = generate_probe(img, a, VerticalFlip{});
  ASSERT_EQ(out.size(), 1u);
  const BBox fb = out[0].annotations[0].bbox;
  EXPECT_EQ(fb, (BBox{3, 5, 5, 3}));
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) {
      const bool inside = x >= fb.x && x < fb.right() && y >= fb.y && y < fb.bottom();
      EXPECT_EQ(out[0].pixels.at(x, y, 0), inside ? 200 : 0) << x << "," << y;
    }
  }
}

TEST(Probe, WhiteBackgroundOneAnnotationPerImage) {
  const Image img = textured(50, 40, 3, 3);
  const std::vector<GroundTruth> a{gt(1, 1, 1, {0, 0, 10, 10}), gt(2, 1, 2, {20, 5, 15, 10}),
                                   gt(3, 1, 1, {30.5, 20.5, 10, 10})};
  const auto out = generate_probe(img, a, WhiteBackground{});
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_EQ(out[i].annotations.size(), 1u);
    EXPECT_EQ(out[i].annotations[0], a[i]);
    EXPECT_EQ(out[i].source_annotation, a[i].id);
  }
  // Outside the box is white, inside is copied.
  EXPECT_EQ(out[1].pixels.at(0, 0, 0), 255);
  EXPECT_EQ(out[1].pixels.at(25, 8, 1), img.at(25, 8, 1));
}

TEST(Probe, NoiseBackgroundDeterministic) {
  const Image img = textured(30, 30, 3, 4);
  const std::vector<GroundTruth> a{gt(1, 1, 1, {5, 5, 10, 10})};
  const auto x = generate_probe(img, a, NoiseBackground{}, 9);
  const auto y = generate_probe(img, a, NoiseBackground{}, 9);
  const auto z = generate_probe(img, a, NoiseBackground{}, 10);
  EXPECT_EQ(x[0].pixels, y[0].pixels);
  EXPECT_NE(x[0].pixels, z[0].pixels);
  EXPECT_EQ(x[0].pixels.at(7, 7, 2), img.at(7, 7, 2));
}

TEST(Probe, ObjectsOnlyKeepsAllAnnotations) {
  const Image img = textured(30, 30, 1, 5);
  const std::vector<GroundTruth> a{gt(1, 1, 1, {0, 0, 5, 5}), gt(2, 1, 2, {20, 20, 5, 5})};
  const auto out = generate_probe(img, a, ObjectsOnly{});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].annotations, a);
  EXPECT_EQ(out[0].pixels.at(10, 10, 0), 255);
  EXPECT_EQ(out[0].pixels.at(21, 22, 0), img.at(21, 22, 0));
}

TEST(Probe, CropSpansOutput) {
  const Image img = textured(30, 30, 3, 6);
  const std::vector<GroundTruth> a{gt(1, 1, 1, {4, 6, 10, 7})};
  const auto out = generate_probe(img, a, CropObject{});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].pixels.width(), 10);
  EXPECT_EQ(out[0].pixels.height(), 7);
  EXPECT_EQ(out[0].annotations[0].bbox, (BBox{0, 0, 10, 7}));
  EXPECT_EQ(out[0].pixels.at(0, 0, 0), img.at(4, 6, 0));
}

TEST(Probe, CropResizeMinDimAndAspect) {
  const Image img = textured(200, 200, 3, 7);
  const std::vector<GroundTruth> a{gt(1, 1, 1, {10, 10, 60, 40})};
  const auto out = generate_probe(img, a, CropResize{300});
  EXPECT_EQ(out[0].pixels.width(), 450);
  EXPECT_EQ(out[0].pixels.height(), 300);
  EXPECT_EQ(out[0].annotations[0].bbox, (BBox{0, 0, 450, 300}));

  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const BBox b{uniform_real(rng, 0, 50), uniform_real(rng, 0, 50), uniform_real(rng, 1, 150),
                 uniform_real(rng, 1, 150)};
    const auto o = generate_probe(img, std::vector<GroundTruth>{gt(1, 1, 1, b)}, CropResize{300});
    const int w = o[0].pixels.width(), h = o[0].pixels.height();
    EXPECT_EQ(std::min(w, h), 300);
    EXPECT_LE(std::fabs(static_cast<double>(w) / h - b.w / b.h), 1.0 / 300);
  }
  const std::vector<GroundTruth> tiny{gt(1, 1, 1, {10, 10, 0.5, 5})};
  EXPECT_THROW(generate_probe(img, tiny, CropResize{300}), ValidationError);
}

TEST(Probe, OutOfBoundsAnnotationRejected) {
  const Image img(20, 20, 1);
  const std::vector<GroundTruth> a{gt(1, 1, 1, {15, 15, 10, 10})};
  EXPECT_THROW(generate_probe(img, a, WhiteBackground{}), ValidationError);
}

Dataset two_image_dataset() {
  Dataset ds;
  ds.images = {{2, 40, 30, "b.png"}, {1, 50, 40, "a.png"}};
  ds.categories = {{1, "x"}, {2, "y"}};
  ds.annotations = {gt(5, 2, 1, {1, 1, 10, 10}), gt(3, 1, 2, {2, 2, 8, 8}),
                    gt(4, 1, 1, {20, 20, 10, 10})};
  validate_dataset(ds);
  return ds;
}

ImageLoader synthetic_loader() {
  return [](const ImageInfo& info) {
    return textured(info.width, info.height, 3, static_cast<std::uint64_t>(info.id));
  };
}

TEST(ProbeDataset, ManifestOrderedBySourceIds) {
  const auto ds = two_image_dataset();
  const auto out = generate_probe_dataset(ds, synthetic_loader(), WhiteBackground{});
  ASSERT_EQ(out.manifest.size(), 3u);
  EXPECT_EQ(out.manifest[0].source_image_id, 1);
  EXPECT_EQ(out.manifest[0].source_annotation_id, 3);
  EXPECT_EQ(out.manifest[1].source_annotation_id, 4);
  EXPECT_EQ(out.manifest[2].source_image_id, 2);
  EXPECT_EQ(out.manifest[2].file_name, "white_bg_000003.png");
  EXPECT_EQ(out.dataset.annotations.size(), 3u);
  for (const auto& a : out.dataset.annotations) {
    EXPECT_EQ(a.category_id, ds.find_annotation(a.id)->category_id);
  }
  const auto json = manifest_to_json("white_bg", out.manifest);
  EXPECT_EQ(json["entries"].size(), 3u);
  EXPECT_EQ(json["variant"], "white_bg");
}

TEST(ProbeDataset, FlipAndBlurPreserveCountsAndParallelMatches) {
  const auto ds = two_image_dataset();
  for (ProbeSpec spec : {ProbeSpec{VerticalFlip{}}, ProbeSpec{GaussianBlur{}},
                         ProbeSpec{ObjectsOnly{}}, ProbeSpec{NoiseBackground{}}}) {
    const auto seq = generate_probe_dataset(ds, synthetic_loader(), spec, 3, 1);
    const auto par = generate_probe_dataset(ds, synthetic_loader(), spec, 3, 2);
    EXPECT_EQ(seq.dataset.annotations.size(), ds.annotations.size()) << probe_name(spec);
    EXPECT_EQ(seq.images, par.images);
    EXPECT_EQ(seq.dataset, par.dataset);
  }
}

TEST(ProbeDataset, SizeMismatchRejected) {
  const auto ds = two_image_dataset();
  const ImageLoader wrong = [](const ImageInfo&) { return Image(10, 10, 3); };
  EXPECT_THROW(generate_probe_dataset(ds, wrong, CropObject{}), ValidationError);
}

TEST(Paste, AtOriginAndTooLarge) {
  const Image src = textured(40, 40, 3, 11);
  const auto obj = cut_object(src, gt(7, 1, 2, {5, 5, 12, 8}));
  const Image bg(60, 50, 3, 10);
  const auto r = paste_incongruent(obj, bg, PlaceAt{0, 0});
  EXPECT_EQ(r.annotation.bbox, (BBox{0, 0, 12, 8}));
  EXPECT_EQ(r.annotation.category_id, 2);
  EXPECT_EQ(r.image.at(0, 0, 0), src.at(5, 5, 0));
  EXPECT_EQ(r.image.at(20, 20, 0), 10);
  EXPECT_THROW(paste_incongruent(obj, Image(10, 10, 3), PlaceAt{0, 0}), ValidationError);
  EXPECT_THROW(paste_incongruent(obj, bg, PlaceAt{55, 0}), ValidationError);
}

TEST(Paste, SameRelativeCenterWithinOnePixel) {
  const Image src = textured(100, 80, 3, 12);
  const auto a = gt(1, 1, 1, {30, 20, 10, 10});
  const auto obj = cut_object(src, a);
  const Image bg(200, 160, 3);
  const auto r = paste_incongruent(obj, bg, PlaceSameRelativeCenter{});
  const double want_x = a.bbox.center_x() / 100.0 * 200;
  const double want_y = a.bbox.center_y() / 80.0 * 160;
  EXPECT_LE(std::fabs(r.annotation.bbox.center_x() - want_x), 1.0);
  EXPECT_LE(std::fabs(r.annotation.bbox.center_y() - want_y), 1.0);
}

TEST(Paste, RandomPlacementInsideAndSeeded) {
  const auto obj = cut_object(textured(40, 40, 3, 13), gt(1, 1, 1, {0, 0, 20, 15}));
  const Image bg(50, 30, 3);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = paste_incongruent(obj, bg, PlaceRandom{s});
    EXPECT_GE(r.annotation.bbox.x, 0);
    EXPECT_LE(r.annotation.bbox.right(), 50);
    EXPECT_LE(r.annotation.bbox.bottom(), 30);
    EXPECT_EQ(r.annotation.bbox, paste_incongruent(obj, bg, PlaceRandom{s}).annotation.bbox);
  }
}

TEST(Incongruent, NineByHundredGivesNineHundred) {
  std::vector<PasteObject> objects;
  const Image src = textured(64, 64, 3, 14);
  for (int i = 0; i < 9; ++i) {
    objects.push_back(cut_object(src, gt(i + 1, 1, 1 + i % 3, {1.0 * i, 2.0 * i, 12, 10})));
  }
  std::vector<Image> backgrounds;
  for (int b = 0; b < 100; ++b) backgrounds.push_back(Image(48, 32, 3, static_cast<std::uint8_t>(b)));
  const std::vector<Category> cats{{1, "a"}, {2, "b"}, {3, "c"}};
  const auto out = generate_incongruent_set(objects, backgrounds, cats, PlacementRule::Random, 1);
  EXPECT_EQ(out.manifest.size(), 900u);
  EXPECT_EQ(out.images.size(), 900u);
  EXPECT_EQ(out.dataset.annotations.size(), 900u);
  EXPECT_EQ(out.manifest[101].source_annotation_id, 2);
  EXPECT_EQ(out.dataset.annotations[101].category_id, 2);
}

TEST(ContextCrops, ObjectOnlyAtUnitScaleMatchesBox) {
  const auto ds = two_image_dataset();
  const auto out = export_context_crops(ds, synthetic_loader(), {});
  ASSERT_EQ(out.manifest.size(), 3u);
  EXPECT_EQ(out.manifest[0].annotation_id, 3);
  EXPECT_EQ(out.manifest[0].file_name, "crop_object_only_3.png");
  EXPECT_EQ(out.crops[0], crop(synthetic_loader()(*ds.find_image(1)), {2, 2, 10, 10}));
}

TEST(ContextCrops, DoubleScaleClipped) {
  const auto ds = two_image_dataset();
  const auto out = export_context_crops(ds, synthetic_loader(), {2.0, ContextMode::ObjectPlusContext});
  // Annotation 5 at (1,1,10,10) in a 40x30 image: scaled to (-4,-4,20,20), clipped.
  const auto img = synthetic_loader()(*ds.find_image(2));
  EXPECT_EQ(out.crops[2], crop(img, pixel_rect(scale_box({1, 1, 10, 10}, 2.0, 40, 30), 40, 30)));
  EXPECT_EQ(out.crops[2].width(), 16);
}

TEST(ContextCrops, ContextOnlyFillsInnerBoxUniformly) {
  const auto ds = two_image_dataset();
  const auto loader = synthetic_loader();
  const auto mean = mean_pixel(ds, loader);
  const auto out = export_context_crops(ds, loader, {1.2, ContextMode::ContextOnly, FillMode::Mean});
  // Annotation 4: (20,20,10,10) scaled 1.2 -> (19,19,12,12).
  const Image& c = out.crops[1];
  EXPECT_EQ(c.width(), 12);
  for (int y = 1; y < 11; ++y) {
    for (int x = 1; x < 11; ++x) {
      for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(c.at(x, y, ch), mean[ch]);
    }
  }
  const auto white = export_context_crops(ds, loader, {1.2, ContextMode::ContextOnly, FillMode::White});
  EXPECT_EQ(white.crops[1].at(5, 5, 0), 255);
}

TEST(ContextCrops, WholeImageAndScaleRange) {
  const auto ds = two_image_dataset();
  const auto whole = export_context_crops(ds, synthetic_loader(), {1.0, ContextMode::WholeImage});
  EXPECT_EQ(whole.crops[0].width(), 50);
  EXPECT_THROW(export_context_crops(ds, synthetic_loader(), {0.1}), PreconditionError);
  EXPECT_THROW(export_context_crops(ds, synthetic_loader(), {2.5}), PreconditionError);
}

TEST(ContextCrops, DegenerateCropSkippedWithWarning) {
  Dataset ds;
  ds.images = {{1, 20, 20, ""}};
  ds.categories = {{1, "x"}};
  // Sliver at the border: scaling by 0.2 around its center leaves less than a pixel.
  ds.annotations = {gt(1, 1, 1, {0, 0, 20, 20}), gt(2, 1, 1, {19.9, 0, 0.05, 20})};
  validate_dataset(ds);
  const auto out = export_context_crops(ds, synthetic_loader(), {0.2});
  ASSERT_EQ(out.manifest.size(), 2u);
  EXPECT_FALSE(out.manifest[0].skipped);
  EXPECT_EQ(out.crops.size(), 2u - out.manifest[1].skipped);
  const auto j = crop_manifest_to_json({0.2}, out.manifest);
  EXPECT_EQ(j["entries"].size(), 2u);
}

TEST(ImageIo, PngAndNetpbmRoundTrip) {
  testing::TempDir dir;
  for (int c : {1, 3}) {
    const Image img = textured(17, 9, c, 15);
    write_image(img, dir.path() / "x.png");
    EXPECT_EQ(read_image(dir.path() / "x.png"), img);
    const auto pnm = dir.path() / (c == 1 ? "x.pgm" : "x.ppm");
    write_image(img, pnm);
    EXPECT_EQ(read_image(pnm), img);
  }
  EXPECT_THROW(read_image(dir.path() / "missing.png"), Error);
}

TEST(ImageOps, ResizeIdentityAndCropPaste) {
  const Image img = textured(12, 8, 3, 16);
  EXPECT_EQ(resize_bilinear(img, 12, 8), img);
  const Image part = crop(img, {2, 3, 7, 8});
  EXPECT_EQ(part.width(), 5);
  Image canvas(12, 8, 3, 0);
  paste(canvas, part, 2, 3);
  EXPECT_EQ(crop(canvas, {2, 3, 7, 8}), part);
}

}  // namespace
}  // namespace detbound
