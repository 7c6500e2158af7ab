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

#include "deltainfer/tensor.hpp"

#include <algorithm>
#include <limits>

#include "deltainfer/error.hpp"

namespace deltainfer {

std::string to_string(const Shape& s) {
  return std::to_string(s.batch) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width) + "x" + std::to_string(s.channels);
}

FeatureTensor::FeatureTensor(Shape shape, float fill)
    : shape_(shape), data_(shape.elements(), fill) {}

FeatureTensor::FeatureTensor(Shape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.elements()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape_));
  }
}

void FeatureTensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void FeatureTensor::reshape(const Shape& shape) {
  shape_ = shape;
  data_.resize(shape.elements());
}

UpdateMask::UpdateMask(std::size_t batch, std::size_t height,
                       std::size_t width, bool value)
    : batch_(batch),
      height_(height),
      width_(width),
      bits_(batch * height * width, value ? 1 : 0) {}

std::size_t UpdateMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

bool UpdateMask::any() const {
  return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

double UpdateMask::density() const {
  return bits_.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(bits_.size());
}

void UpdateMask::fill(bool v) { std::fill(bits_.begin(), bits_.end(), v ? 1 : 0); }

void UpdateMask::reshape(std::size_t batch, std::size_t height, std::size_t width) {
  batch_ = batch;
  height_ = height;
  width_ = width;
  bits_.resize(batch * height * width);
}

TileGrid TileGrid::over(std::size_t height, std::size_t width, const TileSpec& spec) {
  if (spec.tile_height == 0 || spec.tile_width == 0) {
    throw ParamError("tile dimensions must be at least 1");
  }
  return TileGrid{(height + spec.tile_height - 1) / spec.tile_height,
                  (width + spec.tile_width - 1) / spec.tile_width};
}

TileSpec default_tile_for(std::size_t kernel_h, std::size_t kernel_w, std::size_t stride) {
  if (kernel_h == 1 && kernel_w == 1) return {8, 8};
  if (kernel_h <= 3 && kernel_w <= 3 && stride == 1) return {6, 6};
  return {5, 5};
}

void poison_inactive(FeatureTensor& t, const UpdateMask& mask) {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const std::size_t c = t.channels();
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) std::fill_n(t.pixel(p), c, nan);
  }
}

}  // namespace deltainfer
