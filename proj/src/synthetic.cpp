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

#include "deltainfer/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "deltainfer/error.hpp"

namespace deltainfer::synthetic {

std::vector<FeatureTensor> moving_object_video(const MovingObjectOptions& o) {
  if (o.object_size == 0 || o.object_size > o.height || o.object_size > o.width) {
    throw ParamError("moving_object_video: object does not fit the frame");
  }
  std::mt19937 rng(o.seed);
  std::uniform_real_distribution<float> texture(-1.0f, 1.0f);
  FeatureTensor background(Shape{1, o.height, o.width, o.channels});
  // Blocky texture so that the background has structure at several scales.
  std::vector<float> coarse((o.height / 4 + 1) * (o.width / 4 + 1) * o.channels);
  for (float& v : coarse) v = texture(rng);
  for (std::size_t y = 0; y < o.height; ++y) {
    for (std::size_t x = 0; x < o.width; ++x) {
      for (std::size_t c = 0; c < o.channels; ++c) {
        const float base = coarse[((y / 4) * (o.width / 4 + 1) + x / 4) * o.channels + c];
        background.at(0, y, x, c) = base + 0.25f * texture(rng);
      }
    }
  }
  std::vector<float> colour(o.channels);
  for (std::size_t c = 0; c < o.channels; ++c) colour[c] = 2.0f + 0.5f * static_cast<float>(c);

  std::normal_distribution<float> noise(0.0f, o.noise_std > 0.0f ? o.noise_std : 1.0f);
  const long span_y = static_cast<long>(o.height - o.object_size);
  const long span_x = static_cast<long>(o.width - o.object_size);
  long py = span_y / 3;
  long px = span_x / 5;
  int vy = o.velocity_y;
  int vx = o.velocity_x;
  std::vector<FeatureTensor> frames;
  frames.reserve(o.frames);
  for (std::size_t f = 0; f < o.frames; ++f) {
    FeatureTensor frame = background;
    for (std::size_t y = 0; y < o.object_size; ++y) {
      for (std::size_t x = 0; x < o.object_size; ++x) {
        float* p = frame.pixel(0, static_cast<std::size_t>(py) + y, static_cast<std::size_t>(px) + x);
        std::copy(colour.begin(), colour.end(), p);
      }
    }
    if (o.noise_std > 0.0f) {
      for (float& v : frame.data()) v += noise(rng);
    }
    frames.push_back(std::move(frame));
    auto bounce = [](long& pos, int& vel, long span) {
      pos += vel;
      if (pos < 0) {
        pos = -pos;
        vel = -vel;
      } else if (pos > span) {
        pos = 2 * span - pos;
        vel = -vel;
      }
      pos = std::clamp(pos, 0L, span);
    };
    bounce(py, vy, span_y);
    bounce(px, vx, span_x);
  }
  return frames;
}

std::vector<FeatureTensor> static_video(const FeatureTensor& frame, std::size_t frames) {
  return std::vector<FeatureTensor>(frames, frame);
}

ConvParams random_conv(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
                       std::size_t groups, std::uint32_t seed, bool with_bias) {
  ConvParams p;
  p.geometry = geometry;
  p.groups = groups;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  std::mt19937 rng(seed);
  const double fan_in = static_cast<double>(geometry.kernel_h * geometry.kernel_w * p.in_per_group());
  std::normal_distribution<float> w(0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
  p.weights.resize(out_channels * geometry.kernel_h * geometry.kernel_w * p.in_per_group());
  for (float& v : p.weights) v = w(rng);
  if (with_bias) {
    std::uniform_real_distribution<float> b(-0.1f, 0.1f);
    p.bias.resize(out_channels);
    for (float& v : p.bias) v = b(rng);
  }
  p.validate();
  return p;
}

ModelGraph conv_stack(const ConvStackOptions& o) {
  GraphBuilder b("conv_stack", Shape{1, o.height, o.width, o.in_channels}, o.input_epsilon, o.dilation);
  std::size_t cin = o.in_channels;
  for (std::size_t i = 0; i < o.conv_layers; ++i) {
    const std::string id = std::to_string(i + 1);
    b.conv("conv" + id, random_conv(cin, o.channels, ConvGeometry{3, 3, 1, 1, 1}, 1,
                                    o.seed + static_cast<std::uint32_t>(i)));
    b.activation("act" + id, o.activation, o.epsilon);
    cin = o.channels;
  }
  return b.finish();
}

}  // namespace deltainfer::synthetic
