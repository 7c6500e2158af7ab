/* Copyright 2026 The DeltaInfer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deltainfer {

// Batch, rows, columns, channels.
struct Shape {
  std::size_t batch = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t pixels() const { return batch * height * width; }
  std::size_t elements() const { return pixels() * channels; }
  bool same_spatial(const Shape& o) const {
    return batch == o.batch && height == o.height && width == o.width;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Dense NHWC float buffer. All channels of a pixel are contiguous so a
// single pixel can be read or written without touching its neighbours.
// Pixels whose mask bit is false hold stale data and must not be read.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  explicit FeatureTensor(Shape shape, float fill = 0.0f);
  FeatureTensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  std::size_t batch() const { return shape_.batch; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  std::size_t pixel_index(std::size_t b, std::size_t y, std::size_t x) const {
    return (b * shape_.height + y) * shape_.width + x;
  }
  float* pixel(std::size_t b, std::size_t y, std::size_t x) {
    return data_.data() + pixel_index(b, y, x) * shape_.channels;
  }
  const float* pixel(std::size_t b, std::size_t y, std::size_t x) const {
    return data_.data() + pixel_index(b, y, x) * shape_.channels;
  }
  float* pixel(std::size_t flat_pixel) {
    return data_.data() + flat_pixel * shape_.channels;
  }
  const float* pixel(std::size_t flat_pixel) const {
    return data_.data() + flat_pixel * shape_.channels;
  }
  float& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
    return pixel(b, y, x)[c];
  }
  float at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
    return pixel(b, y, x)[c];
  }

  void fill(float v);
  // Reallocates only when the shape changes; contents are unspecified.
  void reshape(const Shape& shape);

 private:
  Shape shape_{};
  std::vector<float> data_;
};

// One byte per (batch, row, col). True means every channel of the paired
// tensor pixel carries a valid delta.
class UpdateMask {
 public:
  UpdateMask() = default;
  UpdateMask(std::size_t batch, std::size_t height, std::size_t width,
             bool value = false);
  static UpdateMask like(const Shape& s, bool value = false) {
    return UpdateMask(s.batch, s.height, s.width, value);
  }

  std::size_t batch() const { return batch_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool matches(const Shape& s) const {
    return batch_ == s.batch && height_ == s.height && width_ == s.width;
  }
  bool same_shape(const UpdateMask& o) const {
    return batch_ == o.batch_ && height_ == o.height_ && width_ == o.width_;
  }

  bool get(std::size_t b, std::size_t y, std::size_t x) const {
    return bits_[(b * height_ + y) * width_ + x] != 0;
  }
  void set(std::size_t b, std::size_t y, std::size_t x, bool v) {
    bits_[(b * height_ + y) * width_ + x] = v ? 1 : 0;
  }
  bool operator[](std::size_t flat) const { return bits_[flat] != 0; }
  void set_flat(std::size_t flat, bool v) { bits_[flat] = v ? 1 : 0; }

  std::span<std::uint8_t> bytes() { return bits_; }
  std::span<const std::uint8_t> bytes() const { return bits_; }

  std::size_t count() const;
  bool any() const;
  double density() const;
  void fill(bool v);
  void reshape(std::size_t batch, std::size_t height, std::size_t width);

  friend bool operator==(const UpdateMask&, const UpdateMask&) = default;

 private:
  std::size_t batch_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Output-pixel tile size. Boundary tiles are clipped.
struct TileSpec {
  std::size_t tile_height = 6;
  std::size_t tile_width = 6;
};

struct TileGrid {
  std::size_t rows = 0;  // tiles along y
  std::size_t cols = 0;  // tiles along x

  static TileGrid over(std::size_t height, std::size_t width,
                       const TileSpec& spec);
  std::size_t count() const { return rows * cols; }
};

// Picks the default output tile for a convolution: 8x8 for 1x1 kernels,
// 6x6 for 3x3 stride 1 and 5x5 otherwise.
TileSpec default_tile_for(std::size_t kernel_h, std::size_t kernel_w,
                          std::size_t stride);

// Fills every pixel whose mask bit is false with quiet NaN.
void poison_inactive(FeatureTensor& t, const UpdateMask& mask);

}  // namespace deltainfer
