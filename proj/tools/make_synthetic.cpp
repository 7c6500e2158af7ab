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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "deltainfer/io.hpp"
#include "deltainfer/manifest.hpp"
#include "deltainfer/synthetic.hpp"

namespace fs = std::filesystem;
using namespace deltainfer;

// Writes a random conv-stack model and a moving-object video for trying the
// delta-infer commands without real data.
int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic model and video"};
  app.name("make-synthetic");
  std::string out;
  synthetic::ConvStackOptions model;
  synthetic::MovingObjectOptions video;
  bool static_video = false;
  bool pnm = false;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--size", model.height, "Frame height and width");
  app.add_option("--layers", model.conv_layers, "Number of conv layers");
  app.add_option("--channels", model.channels, "Channels per conv layer");
  app.add_option("--frames", video.frames, "Video length");
  app.add_option("--noise", video.noise_std, "Sensor noise standard deviation");
  app.add_option("--seed", model.seed, "Weight seed");
  app.add_flag("--static", static_video, "Keep the object still");
  app.add_flag("--pnm", pnm, "Also write the video as a directory of P6 images");
  CLI11_PARSE(app, argc, argv);

  try {
    model.width = model.height;
    video.height = video.width = model.height;
    video.channels = model.in_channels;
    if (static_video) video.velocity_x = video.velocity_y = 0;
    fs::create_directories(out);
    save_model(synthetic::conv_stack(model), fs::path(out) / "model.json", fs::path(out) / "model.bin");
    const auto frames = synthetic::moving_object_video(video);
    io::write_frames(fs::path(out) / "video.dct", frames);
    if (pnm) {
      const fs::path dir = fs::path(out) / "video_pnm";
      fs::create_directories(dir);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        io::Image img{frames[i].width(), frames[i].height(), 3, {}};
        for (float v : frames[i].data()) {
          const float byte = std::clamp((v + 1.5f) / 5.0f * 255.0f, 0.0f, 255.0f);
          img.pixels.push_back(static_cast<std::uint8_t>(byte));
        }
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.ppm", i);
        io::write_pnm(dir / name, img);
      }
    }
    std::cout << "wrote " << out << "/model.json, model.bin, video.dct\n";
  } catch (const std::exception& e) {
    std::cerr << "make-synthetic: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
