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

// AArch64 only; NEON is architecturally guaranteed there.
#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "deltainfer/kernels.hpp"
#include "kernels_internal.hpp"

namespace deltainfer::kernels {
namespace neon {

constexpr std::size_t kLanes = 4;

// vmulq + vaddq rather than vfmaq keeps rounding identical to the scalar path.
void gemv_acc(float* acc, const float* x, const float* w, std::size_t cin, std::size_t cout) {
  std::size_t o = 0;
  for (; o + 4 * kLanes <= cout; o += 4 * kLanes) {
    float32x4_t a0 = vld1q_f32(acc + o);
    float32x4_t a1 = vld1q_f32(acc + o + kLanes);
    float32x4_t a2 = vld1q_f32(acc + o + 2 * kLanes);
    float32x4_t a3 = vld1q_f32(acc + o + 3 * kLanes);
    for (std::size_t i = 0; i < cin; ++i) {
      const float32x4_t xi = vdupq_n_f32(x[i]);
      const float* wr = w + i * cout + o;
      a0 = vaddq_f32(a0, vmulq_f32(xi, vld1q_f32(wr)));
      a1 = vaddq_f32(a1, vmulq_f32(xi, vld1q_f32(wr + kLanes)));
      a2 = vaddq_f32(a2, vmulq_f32(xi, vld1q_f32(wr + 2 * kLanes)));
      a3 = vaddq_f32(a3, vmulq_f32(xi, vld1q_f32(wr + 3 * kLanes)));
    }
    vst1q_f32(acc + o, a0);
    vst1q_f32(acc + o + kLanes, a1);
    vst1q_f32(acc + o + 2 * kLanes, a2);
    vst1q_f32(acc + o + 3 * kLanes, a3);
  }
  for (; o + kLanes <= cout; o += kLanes) {
    float32x4_t a = vld1q_f32(acc + o);
    for (std::size_t i = 0; i < cin; ++i) {
      a = vaddq_f32(a, vmulq_f32(vdupq_n_f32(x[i]), vld1q_f32(w + i * cout + o)));
    }
    vst1q_f32(acc + o, a);
  }
  for (; o < cout; ++o) {
    float a = acc[o];
    for (std::size_t i = 0; i < cin; ++i) {
      const float p = x[i] * w[i * cout + o];
      a = a + p;
    }
    acc[o] = a;
  }
}

void mul_acc(float* acc, const float* x, const float* w, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float32x4_t p = vmulq_f32(vld1q_f32(x + i), vld1q_f32(w + i));
    vst1q_f32(acc + i, vaddq_f32(vld1q_f32(acc + i), p));
  }
  for (; i < n; ++i) {
    const float p = x[i] * w[i];
    acc[i] = acc[i] + p;
  }
}

void add(float* dst, const float* a, const float* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f32(dst + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub(float* dst, const float* a, const float* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f32(dst + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

float max_abs(const float* x, std::size_t n) {
  std::size_t i = 0;
  float m = 0.0f;
  if (n >= kLanes) {
    float32x4_t vm = vdupq_n_f32(0.0f);
    for (; i + kLanes <= n; i += kLanes) vm = vmaxq_f32(vm, vabsq_f32(vld1q_f32(x + i)));
    m = vmaxvq_f32(vm);
  }
  for (; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

void scale_shift(float* dst, const float* x, const float* scale, const float* shift,
                 std::size_t n) {
  std::size_t i = 0;
  if (shift) {
    for (; i + kLanes <= n; i += kLanes) {
      const float32x4_t p = vmulq_f32(vld1q_f32(x + i), vld1q_f32(scale + i));
      vst1q_f32(dst + i, vaddq_f32(p, vld1q_f32(shift + i)));
    }
    for (; i < n; ++i) {
      const float p = x[i] * scale[i];
      dst[i] = p + shift[i];
    }
  } else {
    for (; i + kLanes <= n; i += kLanes) vst1q_f32(dst + i, vmulq_f32(vld1q_f32(x + i), vld1q_f32(scale + i)));
    for (; i < n; ++i) dst[i] = x[i] * scale[i];
  }
}

float activation_delta(ActivationKind fn, float alpha, const float* acc, const float* trunc,
                       const float* dx, float* sum, float* out, std::size_t n,
                       bool first_frame) {
  if (fn != ActivationKind::kRelu && fn != ActivationKind::kIdentity) {
    return scalar::activation_delta(fn, alpha, acc, trunc, dx, sum, out, n, first_frame);
  }
  const bool relu = fn == ActivationKind::kRelu;
  const float32x4_t zero = vdupq_n_f32(0.0f);
  float32x4_t vm = zero;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float32x4_t a = vld1q_f32(acc + i);
    const float32x4_t s = vaddq_f32(vaddq_f32(a, vld1q_f32(trunc + i)), vld1q_f32(dx + i));
    vst1q_f32(sum + i, s);
    const float32x4_t fs = relu ? vmaxq_f32(s, zero) : s;
    const float32x4_t fa = first_frame ? zero : (relu ? vmaxq_f32(a, zero) : a);
    const float32x4_t d = vsubq_f32(fs, fa);
    vst1q_f32(out + i, d);
    vm = vmaxq_f32(vm, vabsq_f32(d));
  }
  float m = n >= kLanes ? vmaxvq_f32(vm) : 0.0f;
  if (i < n) {
    m = std::max(m, scalar::activation_delta(fn, alpha, acc + i, trunc + i, dx + i, sum + i,
                                             out + i, n - i, first_frame));
  }
  return m;
}

}  // namespace neon

const KernelTable* neon_table_impl() {
  static const KernelTable table{Isa::kNeon,     "neon",       &neon::gemv_acc,
                                 &neon::mul_acc, &neon::add,   &neon::sub,
                                 &neon::max_abs, &neon::scale_shift,
                                 &neon::activation_delta};
  return &table;
}

}  // namespace deltainfer::kernels
