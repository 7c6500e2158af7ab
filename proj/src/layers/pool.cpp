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
#include <limits>
#include <string>
#include <vector>

#include "deltainfer/error.hpp"
#include "deltainfer/layers.hpp"
#include "layer_common.hpp"

namespace deltainfer {

Shape pool_output_shape(const Shape& in, const PoolParams& p) {
  if (p.kind == PoolKind::kGlobalAvg) return Shape{in.batch, 1, 1, in.channels};
  const ConvGeometry g = p.geometry();
  return Shape{in.batch, g.output_height(in.height), g.output_width(in.width), in.channels};
}

namespace {

void global_avg(const SparseTensor& in, SparseTensor& out, const kernels::KernelTable& kt) {
  const Shape& s = in.delta.shape();
  const std::size_t c = s.channels;
  const float area = static_cast<float>(s.height * s.width);
  for (std::size_t b = 0; b < s.batch; ++b) {
    float* dst = out.delta.pixel(b, 0, 0);
    std::fill_n(dst, c, 0.0f);
    bool any = false;
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        if (!in.mask.get(b, y, x)) continue;
        kt.add(dst, dst, in.delta.pixel(b, y, x), c);
        any = true;
      }
    }
    for (std::size_t k = 0; k < c; ++k) dst[k] /= area;
    out.mask.set(b, 0, 0, any);
  }
}

}  // namespace

void sparse_pool(const SparseTensor& in, LayerState* state, const PoolParams& params,
                 SparseTensor& out, const ExecContext& ctx, LayerStats* stats) {
  require_mask(in, "pool");
  const Shape& is = in.delta.shape();
  const Shape os = pool_output_shape(is, params);
  out.delta.reshape(os);
  out.mask.reshape(os.batch, os.height, os.width);
  const kernels::KernelTable& kt = ctx.table();
  const std::size_t c = is.channels;

  if (params.kind == PoolKind::kGlobalAvg) {
    global_avg(in, out, kt);
    if (stats) {
      stats->bytes_touched_estimate += in.mask.count() * c * 4;
      record_mask(*stats, out.mask);
    }
    return;
  }

  const ConvGeometry g = params.geometry();
  out.mask = mask_dilate_conv(in.mask, g);
  const bool is_max = params.kind == PoolKind::kMax;
  if (is_max) {
    if (!state) throw ParamError("max pooling requires a layer state");
    require_same_shape(is, state->accumulated.shape(), "max pool state");
  }

  std::vector<float> now(c);
  std::vector<float> before(c);
  std::vector<float> v(c);
  const float neg_inf = -std::numeric_limits<float>::infinity();
  const float area = static_cast<float>(params.kernel * params.kernel);
  std::size_t reads = 0;
  for (std::size_t b = 0; b < os.batch; ++b) {
    for (std::size_t oy = 0; oy < os.height; ++oy) {
      for (std::size_t ox = 0; ox < os.width; ++ox) {
        if (!out.mask.get(b, oy, ox)) continue;
        float* dst = out.delta.pixel(b, oy, ox);
        if (is_max) {
          std::fill(now.begin(), now.end(), neg_inf);
          std::fill(before.begin(), before.end(), neg_inf);
        } else {
          std::fill_n(dst, c, 0.0f);
        }
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(is.height)) continue;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (ix < 0 || ix >= static_cast<long>(is.width)) continue;
            const auto uy = static_cast<std::size_t>(iy);
            const auto ux = static_cast<std::size_t>(ix);
            const bool active = in.mask.get(b, uy, ux);
            if (is_max) {
              const float* acc = state->accumulated.pixel(b, uy, ux);
              if (active) {
                kt.add(v.data(), acc, in.delta.pixel(b, uy, ux), c);
              } else {
                std::copy_n(acc, c, v.data());
              }
              for (std::size_t k = 0; k < c; ++k) {
                now[k] = std::max(now[k], v[k]);
                before[k] = std::max(before[k], acc[k]);
              }
              ++reads;
            } else if (active) {
              kt.add(dst, dst, in.delta.pixel(b, uy, ux), c);
              ++reads;
            }
          }
        }
        if (is_max) {
          for (std::size_t k = 0; k < c; ++k) {
            dst[k] = now[k] == neg_inf ? 0.0f : now[k] - before[k];
          }
        } else {
          for (std::size_t k = 0; k < c; ++k) dst[k] /= area;
        }
      }
    }
  }

  if (is_max) {
    // State advances only after every window has seen the old values.
    for (std::size_t p = 0; p < in.mask.size(); ++p) {
      if (in.mask[p]) {
        float* acc = state->accumulated.pixel(p);
        kt.add(acc, acc, in.delta.pixel(p), c);
      }
    }
  }
  if (stats) {
    stats->bytes_touched_estimate += reads * c * 4 * (is_max ? 2 : 1);
    record_mask(*stats, out.mask);
  }
}

}  // namespace deltainfer
