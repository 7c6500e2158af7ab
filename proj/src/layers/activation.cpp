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
#include <vector>

#include "deltainfer/error.hpp"
#include "deltainfer/layers.hpp"
#include "deltainfer/parallel.hpp"
#include "layer_common.hpp"

namespace deltainfer {

void activate_truncate(const SparseTensor& in, LayerState& state, float epsilon,
                       ActivationKind fn, float alpha, bool first_frame, SparseTensor& out,
                       const ExecContext& ctx, LayerStats* stats) {
  const Shape& s = in.delta.shape();
  require_mask(in, "activate_truncate");
  require_same_shape(s, state.accumulated.shape(), "activate_truncate state");
  if (!state.has_truncation()) throw ParamError("activate_truncate: state has no truncation buffer");
  require_same_shape(s, state.truncated.shape(), "activate_truncate truncation buffer");

  out.delta.reshape(s);
  out.mask.reshape(s.batch, s.height, s.width);
  const std::size_t c = s.channels;
  const kernels::KernelTable& kt = ctx.table();
  const bool always_update = first_frame || epsilon < 0.0f;

  // Rows are pixel-disjoint, so they can be processed in parallel.
  const std::size_t rows = s.batch * s.height;
  std::vector<std::size_t> touched(rows, 0);
  auto row = [&](std::size_t r) {
    thread_local std::vector<float> sum;
    thread_local std::vector<float> cand;
    sum.resize(c);
    cand.resize(c);
    for (std::size_t p = r * s.width; p < (r + 1) * s.width; ++p) {
      if (!in.mask[p]) {
        out.mask.set_flat(p, false);
        continue;
      }
      ++touched[r];
      float* acc = state.accumulated.pixel(p);
      float* trunc = state.truncated.pixel(p);
      const float* dx = in.delta.pixel(p);
      const float m =
          kt.activation_delta(fn, alpha, acc, trunc, dx, sum.data(), cand.data(), c, first_frame);
      if (!always_update && m < epsilon) {
        // Withheld: the input delta waits in the truncation buffer.
        kt.add(trunc, trunc, dx, c);
        out.mask.set_flat(p, false);
      } else {
        std::copy_n(cand.data(), c, out.delta.pixel(p));
        std::copy_n(sum.data(), c, acc);
        std::fill_n(trunc, c, 0.0f);
        out.mask.set_flat(p, true);
      }
    }
  };
  if (ctx.pool) {
    ctx.pool->parallel_for(rows, row);
  } else {
    for (std::size_t r = 0; r < rows; ++r) row(r);
  }
  if (stats) {
    std::size_t n = 0;
    for (std::size_t t : touched) n += t;
    stats->bytes_touched_estimate += n * c * 4 * 6;
    record_mask(*stats, out.mask);
  }
}

}  // namespace deltainfer
