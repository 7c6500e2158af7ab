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

#include <cmath>

#include "deltainfer/error.hpp"
#include "deltainfer/layers.hpp"
#include "layer_common.hpp"

namespace deltainfer {

void delta_generate(const FeatureTensor& frame, LayerState& prev_input, float epsilon_in,
                    std::size_t dilation_radius, bool first_frame, SparseTensor& out,
                    const ExecContext& ctx, LayerStats* stats) {
  const Shape& s = frame.shape();
  require_same_shape(s, prev_input.accumulated.shape(), "delta_generate");
  for (float v : frame.data()) {
    if (!std::isfinite(v)) throw ValueError("delta_generate: frame contains non-finite values");
  }
  const std::size_t c = s.channels;
  const std::size_t pixels = s.pixels();
  out.delta.reshape(s);
  out.mask.reshape(s.batch, s.height, s.width);
  const kernels::KernelTable& kt = ctx.table();

  if (first_frame) {
    std::copy(frame.data().begin(), frame.data().end(), out.delta.data().begin());
    std::copy(frame.data().begin(), frame.data().end(), prev_input.accumulated.data().begin());
    out.mask.fill(true);
  } else {
    for (std::size_t p = 0; p < pixels; ++p) {
      float* d = out.delta.pixel(p);
      kt.sub(d, frame.pixel(p), prev_input.accumulated.pixel(p), c);
      const float m = kt.max_abs(d, c);
      out.mask.set_flat(p, epsilon_in < 0.0f || (m > 0.0f && m >= epsilon_in));
    }
    if (dilation_radius > 0) out.mask = mask_dilate_radius(out.mask, dilation_radius);
    for (std::size_t p = 0; p < pixels; ++p) {
      if (out.mask[p]) std::copy_n(frame.pixel(p), c, prev_input.accumulated.pixel(p));
    }
  }
  if (stats) {
    stats->bytes_touched_estimate += (first_frame ? 2 : 3) * pixels * c * 4;
    record_mask(*stats, out.mask);
  }
}

}  // namespace deltainfer
