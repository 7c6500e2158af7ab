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

#include "deltainfer/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "deltainfer/error.hpp"

namespace deltainfer::io {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kTensorMagic{'D', 'C', 'N', 'T'};
constexpr std::array<char, 4> kMaskMagic{'D', 'C', 'N', 'M'};

std::uint32_t swap32(std::uint32_t v) {
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return swap32(v);
  return v;
}

void put_u32(std::ostream& os, std::size_t value) {
  if (value > 0xffffffffu) throw IoError("dimension does not fit in 32 bits");
  const std::uint32_t le = to_le(static_cast<std::uint32_t>(value));
  os.write(reinterpret_cast<const char*>(&le), 4);
}

std::uint32_t get_u32(std::istream& is, const fs::path& path) {
  std::uint32_t le = 0;
  if (!is.read(reinterpret_cast<char*>(&le), 4)) throw ParseError(path.string() + ": truncated header");
  return to_le(le);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  return is;
}

void check_magic(std::istream& is, const std::array<char, 4>& magic, const fs::path& path) {
  std::array<char, 4> got{};
  if (!is.read(got.data(), 4) || got != magic) {
    throw ParseError(path.string() + ": bad magic, expected " + std::string(magic.data(), 4));
  }
  const std::uint32_t version = get_u32(is, path);
  if (version != kFormatVersion) {
    throw ParseError(path.string() + ": unsupported format version " + std::to_string(version));
  }
}

void write_floats(std::ostream& os, std::span<const float> data) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
  } else {
    for (float f : data) {
      const std::uint32_t le = swap32(std::bit_cast<std::uint32_t>(f));
      os.write(reinterpret_cast<const char*>(&le), 4);
    }
  }
}

void read_floats(std::istream& is, std::span<float> data, const fs::path& path) {
  if (!is.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(float)))) {
    throw ParseError(path.string() + ": truncated data");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : data) f = std::bit_cast<float>(swap32(std::bit_cast<std::uint32_t>(f)));
  }
}

void expect_eof(std::istream& is, const fs::path& path) {
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path.string() + ": trailing bytes after data");
  }
}

// PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& is, const fs::path& path) {
  std::string tok;
  int ch = is.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = is.get();
    } else if (std::isspace(ch)) {
      ch = is.get();
    } else {
      break;
    }
  }
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = is.get();
  }
  if (tok.empty()) throw ParseError(path.string() + ": truncated PNM header");
  return tok;
}

std::size_t pnm_number(std::istream& is, const fs::path& path) {
  const std::string tok = pnm_token(is, path);
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw ParseError(path.string() + ": bad PNM header field '" + tok + "'");
  }
  return std::stoul(tok);
}

bool is_pnm(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

void write_tensor(const fs::path& path, const FeatureTensor& t) {
  auto os = open_out(path);
  os.write(kTensorMagic.data(), 4);
  put_u32(os, kFormatVersion);
  put_u32(os, t.batch());
  put_u32(os, t.height());
  put_u32(os, t.width());
  put_u32(os, t.channels());
  write_floats(os, t.data());
  if (!os) throw IoError("write failed: " + path.string());
}

FeatureTensor read_tensor(const fs::path& path) {
  auto is = open_in(path);
  check_magic(is, kTensorMagic, path);
  Shape s;
  s.batch = get_u32(is, path);
  s.height = get_u32(is, path);
  s.width = get_u32(is, path);
  s.channels = get_u32(is, path);
  FeatureTensor t(s);
  read_floats(is, t.data(), path);
  expect_eof(is, path);
  return t;
}

void write_mask(const fs::path& path, const UpdateMask& m) {
  auto os = open_out(path);
  os.write(kMaskMagic.data(), 4);
  put_u32(os, kFormatVersion);
  put_u32(os, m.batch());
  put_u32(os, m.height());
  put_u32(os, m.width());
  for (std::size_t i = 0; i < m.size(); ++i) os.put(m[i] ? 1 : 0);
  if (!os) throw IoError("write failed: " + path.string());
}

UpdateMask read_mask(const fs::path& path) {
  auto is = open_in(path);
  check_magic(is, kMaskMagic, path);
  const std::size_t b = get_u32(is, path);
  const std::size_t h = get_u32(is, path);
  const std::size_t w = get_u32(is, path);
  UpdateMask m(b, h, w);
  std::vector<char> bytes(m.size());
  if (!is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw ParseError(path.string() + ": truncated mask data");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (bytes[i] != 0 && bytes[i] != 1) throw ParseError(path.string() + ": mask byte not 0/1");
    m.set_flat(i, bytes[i] != 0);
  }
  expect_eof(is, path);
  return m;
}

void write_frames(const fs::path& path, const std::vector<FeatureTensor>& frames) {
  if (frames.empty()) throw ValueError("write_frames: no frames");
  Shape s = frames.front().shape();
  for (const auto& f : frames) {
    if (f.batch() != 1 || !f.shape().same_spatial(s) || f.channels() != s.channels) {
      throw ShapeError("write_frames: frames must share one single-batch shape");
    }
  }
  s.batch = frames.size();
  FeatureTensor all(s);
  const std::size_t n = frames.front().size();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::copy_n(frames[i].data().data(), n, all.data().data() + i * n);
  }
  write_tensor(path, all);
}

Image read_pnm(const fs::path& path) {
  auto is = open_in(path);
  const std::string magic = pnm_token(is, path);
  Image img;
  if (magic == "P5") {
    img.channels = 1;
  } else if (magic == "P6") {
    img.channels = 3;
  } else {
    throw ParseError(path.string() + ": only binary P5/P6 images are supported");
  }
  img.width = pnm_number(is, path);
  img.height = pnm_number(is, path);
  const std::size_t maxval = pnm_number(is, path);
  if (img.width == 0 || img.height == 0) throw ParseError(path.string() + ": empty image");
  if (maxval != 255) throw ParseError(path.string() + ": only 8-bit images (maxval 255) are supported");
  // pnm_token consumed the single whitespace byte after maxval.
  img.pixels.resize(img.width * img.height * img.channels);
  if (!is.read(reinterpret_cast<char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size()))) {
    throw ParseError(path.string() + ": truncated pixel data");
  }
  return img;
}

void write_pnm(const fs::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw ValueError("write_pnm: channels must be 1 or 3");
  if (image.pixels.size() != image.width * image.height * image.channels) {
    throw ShapeError("write_pnm: pixel buffer size mismatch");
  }
  auto os = open_out(path);
  os << (image.channels == 1 ? "P5" : "P6") << '\n'
     << image.width << ' ' << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()),
           static_cast<std::streamsize>(image.pixels.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

FeatureTensor image_to_tensor(const Image& image, const Normalization& norm) {
  const std::size_t c = image.channels;
  if (norm.mean.size() != norm.scale.size() || norm.mean.empty()) {
    throw ParamError("normalization: mean and scale must be non-empty and equally long");
  }
  std::vector<float> mean(c);
  std::vector<float> scale(c);
  if (norm.mean.size() == c) {
    mean = norm.mean;
    scale = norm.scale;
  } else if (norm.mean.size() == 1) {
    std::fill(mean.begin(), mean.end(), norm.mean[0]);
    std::fill(scale.begin(), scale.end(), norm.scale[0]);
  } else if (c == 1) {
    // Grayscale frames use the channel-averaged statistics.
    const auto k = static_cast<float>(norm.mean.size());
    mean[0] = std::accumulate(norm.mean.begin(), norm.mean.end(), 0.0f) / k;
    scale[0] = std::accumulate(norm.scale.begin(), norm.scale.end(), 0.0f) / k;
  } else {
    throw ParamError("normalization has " + std::to_string(norm.mean.size()) + " channels, image has " +
                     std::to_string(c));
  }
  for (float s : scale) {
    if (!(s != 0.0f)) throw ParamError("normalization scale must be non-zero");
  }
  FeatureTensor t(Shape{1, image.height, image.width, c});
  auto d = t.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t k = i % c;
    d[i] = (static_cast<float>(image.pixels[i]) / 255.0f - mean[k]) / scale[k];
  }
  return t;
}

std::vector<FeatureTensor> ingest_frames(const fs::path& source, const Normalization& norm) {
  std::vector<FeatureTensor> frames;
  if (fs::is_directory(source)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(source)) {
      if (entry.is_regular_file() && is_pnm(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      frames.push_back(image_to_tensor(read_pnm(f), norm));
      if (frames.back().shape() != frames.front().shape()) {
        throw ShapeError("frame " + f.string() + " is " + to_string(frames.back().shape()) +
                         ", expected " + to_string(frames.front().shape()));
      }
    }
  } else if (fs::is_regular_file(source)) {
    const FeatureTensor all = read_tensor(source);
    const Shape one{1, all.height(), all.width(), all.channels()};
    const std::size_t n = one.elements();
    for (std::size_t b = 0; b < all.batch(); ++b) {
      FeatureTensor f(one);
      std::copy_n(all.data().data() + b * n, n, f.data().data());
      frames.push_back(std::move(f));
    }
  } else {
    throw IoError("frame source not found: " + source.string());
  }
  if (frames.empty()) throw ValueError("no frames in " + source.string());
  return frames;
}

}  // namespace deltainfer::io
