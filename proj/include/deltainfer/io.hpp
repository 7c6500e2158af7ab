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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "deltainfer/tensor.hpp"

namespace deltainfer::io {

inline constexpr std::uint32_t kFormatVersion = 1;

// ".dct" container: "DCNT", u32 version, u32 batch/height/width/channels,
// float32 data. All integers and floats little-endian.
void write_tensor(const std::filesystem::path& path, const FeatureTensor& t);
FeatureTensor read_tensor(const std::filesystem::path& path);

// "DCNM", u32 version, u32 batch/height/width, one byte per pixel.
void write_mask(const std::filesystem::path& path, const UpdateMask& m);
UpdateMask read_mask(const std::filesystem::path& path);

// Frames stacked along the batch dimension of a single container.
void write_frames(const std::filesystem::path& path, const std::vector<FeatureTensor>& frames);

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 (P5) or 3 (P6)
  std::vector<std::uint8_t> pixels;
};

Image read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& image);

// value = (byte / 255 - mean[c]) / scale[c]
struct Normalization {
  std::vector<float> mean{0.485f, 0.456f, 0.406f};
  std::vector<float> scale{0.229f, 0.224f, 0.225f};

  static Normalization imagenet() { return {}; }
  static Normalization identity() { return {{0.0f}, {1.0f}}; }
};

FeatureTensor image_to_tensor(const Image& image, const Normalization& norm = {});

// A ".dct" container yields one frame per batch entry (already float, no
// normalisation). A directory yields its .pgm/.ppm/.pnm files in name order.
std::vector<FeatureTensor> ingest_frames(const std::filesystem::path& source,
                                         const Normalization& norm = {});

}  // namespace deltainfer::io
