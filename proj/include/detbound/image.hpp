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

// 8-bit interleaved pixel buffers and lossless file I/O (PNG, PPM/PGM).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace detbound {

class Image {
 public:
  Image() = default;
  // Filled with `fill` in every channel.
  Image(int width, int height, int channels, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t& at(int x, int y, int c) {
    return pixels_[index(x, y, c)];
  }
  std::uint8_t at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

  std::span<std::uint8_t> row(int y) {
    return {pixels_.data() + row_stride() * y, row_stride()};
  }
  std::span<const std::uint8_t> row(int y) const {
    return {pixels_.data() + row_stride() * y, row_stride()};
  }
  std::size_t row_stride() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(channels_);
  }

  std::vector<std::uint8_t>& pixels() { return pixels_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Integer pixel window [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Copies a window; the window must lie inside the image.
Image crop(const Image& img, const PixelRect& rect);

// Bilinear resampling with pixel-center alignment.
Image resize_bilinear(const Image& img, int width, int height);

// Copies `src` into `dst` with its top-left at (x, y); must fit.
void paste(Image& dst, const Image& src, int x, int y);

// Reads PNG (8-bit gray, gray+alpha, RGB, RGBA, palette) or binary PPM/PGM.
// Alpha is dropped. Throws ParseError.
Image read_image(const std::filesystem::path& path);

// Format chosen from the extension: .png, .ppm (3 channels), .pgm (1).
void write_image(const Image& img, const std::filesystem::path& path);

}  // namespace detbound
