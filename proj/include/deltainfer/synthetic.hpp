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
#include <vector>

#include "deltainfer/graph.hpp"

namespace deltainfer::synthetic {

struct MovingObjectOptions {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t channels = 3;
  std::size_t frames = 100;
  std::size_t object_size = 8;
  // Pixels per frame along each axis; the object bounces off the borders.
  int velocity_y = 1;
  int velocity_x = 2;
  // Per-pixel Gaussian sensor noise added to every frame; 0 keeps the
  // background exactly static.
  float noise_std = 0.0f;
  std::uint32_t seed = 7;
};

// Fixed random background with a bright square moving over it.
std::vector<FeatureTensor> moving_object_video(const MovingObjectOptions& options = {});

std::vector<FeatureTensor> static_video(const FeatureTensor& frame, std::size_t frames);

struct ConvStackOptions {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t in_channels = 3;
  std::size_t channels = 16;
  std::size_t conv_layers = 10;
  ActivationKind activation = ActivationKind::kRelu;
  float epsilon = 0.0f;
  float input_epsilon = 0.0f;
  std::size_t dilation = 0;
  std::uint32_t seed = 11;
};

// 3x3 stride-1 convolutions, each followed by an activation.
ModelGraph conv_stack(const ConvStackOptions& options = {});

// He-style random weights and small random biases for a convolution.
ConvParams random_conv(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
                       std::size_t groups, std::uint32_t seed, bool with_bias = true);

}  // namespace deltainfer::synthetic
