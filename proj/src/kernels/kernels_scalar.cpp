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

#include "deltainfer/kernels.hpp"
#include "kernels_internal.hpp"

namespace deltainfer::kernels {

float activate(ActivationKind fn, float alpha, float x) {
  switch (fn) {
    case ActivationKind::kRelu:
      return x > 0.0f ? x : 0.0f;
    case ActivationKind::kRelu6: {
      const float r = x > 0.0f ? x : 0.0f;
      return r < 6.0f ? r : 6.0f;
    }
    case ActivationKind::kLeakyRelu:
      return x > 0.0f ? x : alpha * x;
    case ActivationKind::kSigmoid:
      return 1.0f / (1.0f + std::exp(-x));
    case ActivationKind::kSwish:
      return x / (1.0f + std::exp(-x));
    case ActivationKind::kIdentity:
      return x;
  }
  return x;
}

namespace scalar {

void gemv_acc(float* acc, const float* x, const float* w, std::size_t cin, std::size_t cout) {
  for (std::size_t i = 0; i < cin; ++i) {
    const float xi = x[i];
    const float* wr = w + i * cout;
    for (std::size_t o = 0; o < cout; ++o) {
      const float p = xi * wr[o];
      acc[o] = acc[o] + p;
    }
  }
}

void mul_acc(float* acc, const float* x, const float* w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float p = x[i] * w[i];
    acc[i] = acc[i] + p;
  }
}

void add(float* dst, const float* a, const float* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub(float* dst, const float* a, const float* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

float max_abs(const float* x, std::size_t n) {
  float m = 0.0f;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

void scale_shift(float* dst, const float* x, const float* scale, const float* shift,
                 std::size_t n) {
  if (shift) {
    for (std::size_t i = 0; i < n; ++i) {
      const float p = x[i] * scale[i];
      dst[i] = p + shift[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] * scale[i];
  }
}

float activation_delta(ActivationKind fn, float alpha, const float* acc, const float* trunc,
                       const float* dx, float* sum, float* out, std::size_t n,
                       bool first_frame) {
  float m = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float s = (acc[i] + trunc[i]) + dx[i];
    sum[i] = s;
    const float prev = first_frame ? 0.0f : activate(fn, alpha, acc[i]);
    out[i] = activate(fn, alpha, s) - prev;
    m = std::max(m, std::fabs(out[i]));
  }
  return m;
}

}  // namespace scalar

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar,       "scalar",          &scalar::gemv_acc,
                                 &scalar::mul_acc,   &scalar::add,      &scalar::sub,
                                 &scalar::max_abs,   &scalar::scale_shift,
                                 &scalar::activation_delta};
  return table;
}

}  // namespace deltainfer::kernels
