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

#include <cstddef>

#include "deltainfer/kernels.hpp"

namespace deltainfer::kernels {

namespace scalar {
float activation_delta(ActivationKind fn, float alpha, const float* acc, const float* trunc,
                       const float* dx, float* sum, float* out, std::size_t n,
                       bool first_frame);
}  // namespace scalar

// Defined in the ISA translation units that are compiled for this target.
const KernelTable* avx2_table_impl();
const KernelTable* neon_table_impl();

}  // namespace deltainfer::kernels
