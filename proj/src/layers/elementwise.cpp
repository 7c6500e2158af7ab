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
#include <string>

#include "deltainfer/error.hpp"
#include "deltainfer/layers.hpp"
#include "layer_common.hpp"

namespace deltainfer {

void sparse_affine(const SparseTensor& in, std::span<const float> scale,
                   std::span<const float> shift, bool first_frame, SparseTensor& out,
                   const ExecContext& ctx, LayerStats* stats) {
  require_mask(in, "affine");
  const Shape& s = in.delta.shape();
  if (scale.size() != s.channels || shift.size() != s.channels) {
    throw ShapeError("affine: scale/shift length must equal channel count " +
                     std::to_string(s.channels));
  }
  out.delta.reshape(s);
  out.mask = in.mask;
  const kernels::KernelTable& kt = ctx.table();
  const float* sh = first_frame ? shift.data() : nullptr;
  std::size_t n = 0;
  for (std::size_t p = 0; p < in.mask.size(); ++p) {
    if (!in.mask[p]) continue;
    kt.scale_shift(out.delta.pixel(p), in.delta.pixel(p), scale.data(), sh, s.channels);
    ++n;
  }
  if (stats) {
    stats->bytes_touched_estimate += n * s.channels * 4 * 2;
    record_mask(*stats, out.mask);
  }
}

void sparse_add(const SparseTensor& a, const SparseTensor& b, SparseTensor& out,
                const ExecContext& ctx, LayerStats* stats) {
  require_mask(a, "add");
  require_mask(b, "add");
  require_same_shape(a.delta.shape(), b.delta.shape(), "add");
  const Shape& s = a.delta.shape();
  const std::size_t c = s.channels;
  out.delta.reshape(s);
  out.mask.reshape(s.batch, s.height, s.width);
  const kernels::KernelTable& kt = ctx.table();
  std::size_t reads = 0;
  for (std::size_t p = 0; p < a.mask.size(); ++p) {
    const bool ia = a.mask[p];
    const bool ib = b.mask[p];
    out.mask.set_flat(p, ia || ib);
    if (ia && ib) {
      kt.add(out.delta.pixel(p), a.delta.pixel(p), b.delta.pixel(p), c);
      reads += 2;
    } else if (ia) {
      std::copy_n(a.delta.pixel(p), c, out.delta.pixel(p));
      ++reads;
    } else if (ib) {
      std::copy_n(b.delta.pixel(p), c, out.delta.pixel(p));
      ++reads;
    }
  }
  if (stats) {
    stats->bytes_touched_estimate += reads * c * 4 * 2;
    record_mask(*stats, out.mask);
  }
}

void sparse_concat(std::span<const SparseTensor* const> inputs, SparseTensor& out,
                   const ExecContext& ctx, LayerStats* stats) {
  (void)ctx;
  if (inputs.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = inputs.front()->delta.shape();
  std::size_t channels = 0;
  for (const SparseTensor* t : inputs) {
    require_mask(*t, "concat");
    if (!t->delta.shape().same_spatial(first)) throw ShapeError("concat: spatial shapes differ");
    channels += t->delta.channels();
  }
  const Shape os{first.batch, first.height, first.width, channels};
  out.delta.reshape(os);
  out.mask.reshape(os.batch, os.height, os.width);
  out.mask.fill(false);
  for (const SparseTensor* t : inputs) {
    for (std::size_t p = 0; p < t->mask.size(); ++p) {
      if (t->mask[p]) out.mask.set_flat(p, true);
    }
  }
  std::size_t written = 0;
  for (std::size_t p = 0; p < out.mask.size(); ++p) {
    if (!out.mask[p]) continue;
    float* dst = out.delta.pixel(p);
    for (const SparseTensor* t : inputs) {
      const std::size_t c = t->delta.channels();
      if (t->mask[p]) {
        std::copy_n(t->delta.pixel(p), c, dst);
      } else {
        std::fill_n(dst, c, 0.0f);  // a concatenated pixel must be fully valid
      }
      dst += c;
    }
    ++written;
  }
  if (stats) {
    stats->bytes_touched_estimate += written * channels * 4 * 2;
    record_mask(*stats, out.mask);
  }
}

FeatureTensor dense_accumulate(const SparseTensor& in, LayerState& output_state,
                               const ExecContext& ctx, LayerStats* stats) {
  require_mask(in, "dense_accumulate");
  require_same_shape(in.delta.shape(), output_state.accumulated.shape(), "dense_accumulate");
  const kernels::KernelTable& kt = ctx.table();
  const std::size_t c = in.delta.channels();
  std::size_t n = 0;
  for (std::size_t p = 0; p < in.mask.size(); ++p) {
    if (!in.mask[p]) continue;
    float* acc = output_state.accumulated.pixel(p);
    kt.add(acc, acc, in.delta.pixel(p), c);
    ++n;
  }
  if (stats) {
    stats->bytes_touched_estimate += (n * c * 3 + output_state.accumulated.size()) * 4;
    record_mask(*stats, in.mask);
  }
  return output_state.accumulated;
}

}  // namespace deltainfer
