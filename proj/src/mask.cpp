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

#include "deltainfer/mask.hpp"

#include <algorithm>
#include <string>

#include "deltainfer/error.hpp"

namespace deltainfer {

namespace {

std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride,
                        std::size_t dilation, std::size_t padding) {
  if (k == 0 || stride == 0 || dilation == 0) {
    throw ParamError("kernel, stride and dilation must be at least 1");
  }
  const std::size_t span = dilation * (k - 1) + 1;
  if (in + 2 * padding < span) {
    throw ShapeError("input extent " + std::to_string(in) +
                     " is smaller than the dilated kernel " + std::to_string(span));
  }
  return (in + 2 * padding - span) / stride + 1;
}

// Sorted, clipped input coordinates touched by outputs [o0, o1).
std::vector<std::size_t> covered(std::size_t o0, std::size_t o1, std::size_t k,
                                 std::size_t stride, std::size_t dilation,
                                 std::size_t padding, std::size_t in) {
  std::vector<std::uint8_t> hit(in, 0);
  for (std::size_t o = o0; o < o1; ++o) {
    for (std::size_t t = 0; t < k; ++t) {
      const long i = static_cast<long>(o * stride + t * dilation) - static_cast<long>(padding);
      if (i >= 0 && i < static_cast<long>(in)) hit[static_cast<std::size_t>(i)] = 1;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < in; ++i) {
    if (hit[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

std::size_t ConvGeometry::output_height(std::size_t in_h) const {
  return conv_extent(in_h, kernel_h, stride, dilation, padding);
}

std::size_t ConvGeometry::output_width(std::size_t in_w) const {
  return conv_extent(in_w, kernel_w, stride, dilation, padding);
}

InputWindow conv_input_window(const ConvGeometry& g, std::size_t in_h, std::size_t in_w,
                              std::size_t out_y0, std::size_t out_y1, std::size_t out_x0,
                              std::size_t out_x1) {
  InputWindow w;
  const long pad = static_cast<long>(g.padding);
  w.row_begin = static_cast<long>(out_y0 * g.stride) - pad;
  w.row_end = static_cast<long>((out_y1 - 1) * g.stride + (g.kernel_h - 1) * g.dilation) - pad + 1;
  w.col_begin = static_cast<long>(out_x0 * g.stride) - pad;
  w.col_end = static_cast<long>((out_x1 - 1) * g.stride + (g.kernel_w - 1) * g.dilation) - pad + 1;
  w.rows = covered(out_y0, out_y1, g.kernel_h, g.stride, g.dilation, g.padding, in_h);
  w.cols = covered(out_x0, out_x1, g.kernel_w, g.stride, g.dilation, g.padding, in_w);
  return w;
}

UpdateMask mask_dilate_conv(const UpdateMask& mask, const ConvGeometry& g) {
  const std::size_t in_h = mask.height();
  const std::size_t in_w = mask.width();
  const std::size_t out_h = g.output_height(in_h);
  const std::size_t out_w = g.output_width(in_w);
  UpdateMask out(mask.batch(), out_h, out_w);

  // Separable: OR along x into a (in_h x out_w) scratch, then along y.
  std::vector<std::uint8_t> rows(in_h * out_w);
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    for (std::size_t iy = 0; iy < in_h; ++iy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        std::uint8_t v = 0;
        for (std::size_t kx = 0; kx < g.kernel_w && !v; ++kx) {
          const long ix = static_cast<long>(ox * g.stride + kx * g.dilation) -
                          static_cast<long>(g.padding);
          if (ix >= 0 && ix < static_cast<long>(in_w)) {
            v = mask.get(b, iy, static_cast<std::size_t>(ix)) ? 1 : 0;
          }
        }
        rows[iy * out_w + ox] = v;
      }
    }
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        bool v = false;
        for (std::size_t ky = 0; ky < g.kernel_h && !v; ++ky) {
          const long iy = static_cast<long>(oy * g.stride + ky * g.dilation) -
                          static_cast<long>(g.padding);
          if (iy >= 0 && iy < static_cast<long>(in_h)) {
            v = rows[static_cast<std::size_t>(iy) * out_w + ox] != 0;
          }
        }
        out.set(b, oy, ox, v);
      }
    }
  }
  return out;
}

UpdateMask mask_dilate_conv(const UpdateMask& mask, std::size_t kernel_h, std::size_t kernel_w,
                            std::size_t stride, std::size_t dilation, std::size_t padding) {
  return mask_dilate_conv(mask, ConvGeometry{kernel_h, kernel_w, stride, dilation, padding});
}

UpdateMask mask_dilate_radius(const UpdateMask& mask, std::size_t radius) {
  if (radius == 0) return mask;
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  UpdateMask out(mask.batch(), h, w);
  std::vector<std::uint8_t> horiz(h * w);
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t x0 = x > radius ? x - radius : 0;
        const std::size_t x1 = std::min(w - 1, x + radius);
        std::uint8_t v = 0;
        for (std::size_t xx = x0; xx <= x1 && !v; ++xx) v = mask.get(b, y, xx) ? 1 : 0;
        horiz[y * w + x] = v;
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t y0 = y > radius ? y - radius : 0;
      const std::size_t y1 = std::min(h - 1, y + radius);
      for (std::size_t x = 0; x < w; ++x) {
        bool v = false;
        for (std::size_t yy = y0; yy <= y1 && !v; ++yy) v = horiz[yy * w + x] != 0;
        out.set(b, y, x, v);
      }
    }
  }
  return out;
}

UpdateMask mask_union(const UpdateMask& a, const UpdateMask& b) {
  if (!a.same_shape(b)) throw ShapeError("mask_union: mask shapes differ");
  UpdateMask out = a;
  auto dst = out.bytes();
  auto src = b.bytes();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (dst[i] | src[i]) ? 1 : 0;
  return out;
}

std::size_t tile_active_count(const UpdateMask& mask, std::size_t batch,
                              const InputWindow& window) {
  std::size_t n = 0;
  for (std::size_t y : window.rows) {
    for (std::size_t x : window.cols) n += mask.get(batch, y, x) ? 1 : 0;
  }
  return n;
}

}  // namespace deltainfer
