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

#pragma once

#include "deltainfer/layers.hpp"

namespace deltainfer {

inline void record_mask(LayerStats& stats, const UpdateMask& mask) {
  stats.active_pixels += mask.count();
  stats.total_pixels += mask.size();
}

void require_same_shape(const Shape& a, const Shape& b, const char* what);
void require_mask(const SparseTensor& t, const char* what);

}  // namespace deltainfer
