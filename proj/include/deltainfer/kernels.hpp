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
#include <string_view>

namespace deltainfer {

enum class ActivationKind { kRelu, kRelu6, kLeakyRelu, kSigmoid, kSwish, kIdentity };

namespace kernels {

enum class Isa { kScalar, kAvx2, kNeon };

// Inner loops shared by the sparse layers. Every variant performs the same
// sequence of IEEE multiplies and adds per output lane (no fused
// multiply-add, fixed reduction order), so results are bit-identical across
// ISAs. sigmoid and swish go through libm in every variant.
struct KernelTable {
  Isa isa;
  const char* name;

  // acc[o] += x[i] * w[i * cout + o], i ascending, for o < cout.
  void (*gemv_acc)(float* acc, const float* x, const float* w, std::size_t cin,
                   std::size_t cout);
  // acc[i] += x[i] * w[i]
  void (*mul_acc)(float* acc, const float* x, const float* w, std::size_t n);
  // dst[i] = a[i] + b[i]
  void (*add)(float* dst, const float* a, const float* b, std::size_t n);
  // dst[i] = a[i] - b[i]
  void (*sub)(float* dst, const float* a, const float* b, std::size_t n);
  float (*max_abs)(const float* x, std::size_t n);
  // dst[i] = x[i] * scale[i] (+ shift[i] when shift is non-null)
  void (*scale_shift)(float* dst, const float* x, const float* scale, const float* shift,
                      std::size_t n);
  // sum[i] = (acc[i] + trunc[i]) + dx[i]
  // out[i] = f(sum[i]) - (first_frame ? 0 : f(acc[i]))
  // Returns max |out[i]|.
  float (*activation_delta)(ActivationKind fn, float alpha, const float* acc,
                            const float* trunc, const float* dx, float* sum, float* out,
                            std::size_t n, bool first_frame);
};

const KernelTable& scalar_table();
// nullptr when the ISA is not compiled in or not supported by this CPU.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Best table for this machine. DELTA_INFER_ISA=scalar|avx2|neon overrides
// the choice when the requested ISA is available.
const KernelTable& active();
void set_active(Isa isa);

std::string_view isa_name(Isa isa);

// Scalar activation used by all variants for the transcendental kinds.
float activate(ActivationKind fn, float alpha, float x);

}  // namespace kernels
}  // namespace deltainfer
