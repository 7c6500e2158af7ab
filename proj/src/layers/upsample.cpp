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
#include <cmath>
#include <vector>

#include "deltainfer/error.hpp"
#include "deltainfer/layers.hpp"
#include "layer_common.hpp"

namespace deltainfer {

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  float frac;  // weight of hi
};

// Half-pixel source coordinate, clamped at the borders.
Tap source_tap(std::size_t o, std::size_t factor, std::size_t in) {
  float src = (static_cast<float>(o) + 0.5f) / static_cast<float>(factor) - 0.5f;
  if (src < 0.0f) src = 0.0f;
  auto lo = static_cast<std::size_t>(std::floor(src));
  if (lo > in - 1) lo = in - 1;
  const std::size_t hi = std::min(lo + 1, in - 1);
  return Tap{lo, hi, src - static_cast<float>(lo)};
}

}  // namespace

void sparse_upsample(const SparseTensor& in, std::size_t factor, UpsampleMode mode,
                     SparseTensor& out, const ExecContext& ctx, LayerStats* stats) {
  require_mask(in, "upsample");
  if (factor == 0) throw ParamError("upsample: factor must be at least 1");
  const Shape& is = in.delta.shape();
  const Shape os{is.batch, is.height * factor, is.width * factor, is.channels};
  out.delta.reshape(os);
  out.mask.reshape(os.batch, os.height, os.width);
  const std::size_t c = is.channels;
  const kernels::KernelTable& kt = ctx.table();
  std::size_t written = 0;

  if (mode == UpsampleMode::kNearest) {
    for (std::size_t b = 0; b < os.batch; ++b) {
      for (std::size_t y = 0; y < os.height; ++y) {
        for (std::size_t x = 0; x < os.width; ++x) {
          const bool a = in.mask.get(b, y / factor, x / factor);
          out.mask.set(b, y, x, a);
          if (a) {
            std::copy_n(in.delta.pixel(b, y / factor, x / factor), c, out.delta.pixel(b, y, x));
            ++written;
          }
        }
      }
    }
  } else {
    std::vector<Tap> ty(os.height);
    std::vector<Tap> tx(os.width);
    for (std::size_t y = 0; y < os.height; ++y) ty[y] = source_tap(y, factor, is.height);
    for (std::size_t x = 0; x < os.width; ++x) tx[x] = source_tap(x, factor, is.width);
    std::vector<float> w(c);
    for (std::size_t b = 0; b < os.batch; ++b) {
      for (std::size_t y = 0; y < os.height; ++y) {
        const Tap& vy = ty[y];
        for (std::size_t x = 0; x < os.width; ++x) {
          const Tap& vx = tx[x];
          const std::size_t sy[2] = {vy.lo, vy.hi};
          const std::size_t sx[2] = {vx.lo, vx.hi};
          const float wy[2] = {1.0f - vy.frac, vy.frac};
          const float wx[2] = {1.0f - vx.frac, vx.frac};
          bool any = false;
          for (int i = 0; i < 2 && !any; ++i)
            for (int j = 0; j < 2 && !any; ++j) any = in.mask.get(b, sy[i], sx[j]);
          out.mask.set(b, y, x, any);
          if (!any) continue;
          float* dst = out.delta.pixel(b, y, x);
          std::fill_n(dst, c, 0.0f);
          for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
              if (!in.mask.get(b, sy[i], sx[j])) continue;
              std::fill(w.begin(), w.end(), wy[i] * wx[j]);
              kt.mul_acc(dst, in.delta.pixel(b, sy[i], sx[j]), w.data(), c);
            }
          }
          ++written;
        }
      }
    }
  }
  if (stats) {
    stats->bytes_touched_estimate += written * c * 4 * (mode == UpsampleMode::kNearest ? 2 : 5);
    record_mask(*stats, out.mask);
  }
}

}  // namespace deltainfer
