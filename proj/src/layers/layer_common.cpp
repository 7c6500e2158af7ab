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

#include "layer_common.hpp"

#include <string>

#include "deltainfer/error.hpp"

namespace deltainfer {

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape " + to_string(a) + " does not match " +
                     to_string(b));
  }
}

void require_mask(const SparseTensor& t, const char* what) {
  if (!t.mask.matches(t.delta.shape())) {
    throw ShapeError(std::string(what) + ": update mask does not match tensor " +
                     to_string(t.delta.shape()));
  }
}

LayerState LayerState::zeros(const Shape& shape, bool with_truncation) {
  LayerState s;
  s.accumulated = FeatureTensor(shape, 0.0f);
  if (with_truncation) s.truncated = FeatureTensor(shape, 0.0f);
  return s;
}

void LayerState::reset() {
  accumulated.fill(0.0f);
  truncated.fill(0.0f);
  bias_applied = false;
}

TileMode select_tile_mode(std::size_t active_inputs, const DispatchConfig& cfg) {
  if (active_inputs == 0) return TileMode::kSkip;
  return active_inputs <= cfg.very_sparse_max ? TileMode::kVerySparse : TileMode::kDense;
}

const char* tile_mode_name(TileMode m) {
  switch (m) {
    case TileMode::kSkip:
      return "skip";
    case TileMode::kVerySparse:
      return "very_sparse";
    case TileMode::kDense:
      return "dense";
  }
  return "?";
}

const kernels::KernelTable& ExecContext::table() const {
  return kernels ? *kernels : kernels::active();
}

}  // namespace deltainfer
