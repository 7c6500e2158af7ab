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

// Built with -mavx2 only when the compiler targets x86-64; the dispatcher
// checks CPU support before handing out this table.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "deltainfer/kernels.hpp"
#include "kernels_internal.hpp"

namespace deltainfer::kernels {
namespace avx2 {
namespace {

constexpr std::size_t kLanes = 8;

inline __m256 abs_ps(__m256 v) {
  return _mm256_and_ps(v, _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff)));
}

inline float hmax(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_max_ps(lo, hi);
  lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

}  // namespace

void gemv_acc(float* acc, const float* x, const float* w, std::size_t cin, std::size_t cout) {
  std::size_t o = 0;
  for (; o + 4 * kLanes <= cout; o += 4 * kLanes) {
    __m256 a0 = _mm256_loadu_ps(acc + o);
    __m256 a1 = _mm256_loadu_ps(acc + o + kLanes);
    __m256 a2 = _mm256_loadu_ps(acc + o + 2 * kLanes);
    __m256 a3 = _mm256_loadu_ps(acc + o + 3 * kLanes);
    for (std::size_t i = 0; i < cin; ++i) {
      const __m256 xi = _mm256_set1_ps(x[i]);
      const float* wr = w + i * cout + o;
      a0 = _mm256_add_ps(a0, _mm256_mul_ps(xi, _mm256_loadu_ps(wr)));
      a1 = _mm256_add_ps(a1, _mm256_mul_ps(xi, _mm256_loadu_ps(wr + kLanes)));
      a2 = _mm256_add_ps(a2, _mm256_mul_ps(xi, _mm256_loadu_ps(wr + 2 * kLanes)));
      a3 = _mm256_add_ps(a3, _mm256_mul_ps(xi, _mm256_loadu_ps(wr + 3 * kLanes)));
    }
    _mm256_storeu_ps(acc + o, a0);
    _mm256_storeu_ps(acc + o + kLanes, a1);
    _mm256_storeu_ps(acc + o + 2 * kLanes, a2);
    _mm256_storeu_ps(acc + o + 3 * kLanes, a3);
  }
  for (; o + kLanes <= cout; o += kLanes) {
    __m256 a = _mm256_loadu_ps(acc + o);
    for (std::size_t i = 0; i < cin; ++i) {
      a = _mm256_add_ps(a, _mm256_mul_ps(_mm256_set1_ps(x[i]), _mm256_loadu_ps(w + i * cout + o)));
    }
    _mm256_storeu_ps(acc + o, a);
  }
  if (o < cout) {
    const std::size_t rem = cout - o;
    alignas(32) int lanes[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) lanes[l] = l < rem ? -1 : 0;
    const __m256i m = _mm256_load_si256(reinterpret_cast<const __m256i*>(lanes));
    __m256 a = _mm256_maskload_ps(acc + o, m);
    for (std::size_t i = 0; i < cin; ++i) {
      a = _mm256_add_ps(a, _mm256_mul_ps(_mm256_set1_ps(x[i]),
                                         _mm256_maskload_ps(w + i * cout + o, m)));
    }
    _mm256_maskstore_ps(acc + o, m, a);
  }
}

void mul_acc(float* acc, const float* x, const float* w, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256 p = _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(w + i));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), p));
  }
  for (; i < n; ++i) {
    const float p = x[i] * w[i];
    acc[i] = acc[i] + p;
  }
}

void add(float* dst, const float* a, const float* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub(float* dst, const float* a, const float* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_ps(dst + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

float max_abs(const float* x, std::size_t n) {
  std::size_t i = 0;
  float m = 0.0f;
  if (n >= kLanes) {
    __m256 vm = _mm256_setzero_ps();
    for (; i + kLanes <= n; i += kLanes) vm = _mm256_max_ps(vm, abs_ps(_mm256_loadu_ps(x + i)));
    m = hmax(vm);
  }
  for (; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

void scale_shift(float* dst, const float* x, const float* scale, const float* shift,
                 std::size_t n) {
  std::size_t i = 0;
  if (shift) {
    for (; i + kLanes <= n; i += kLanes) {
      const __m256 p = _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(scale + i));
      _mm256_storeu_ps(dst + i, _mm256_add_ps(p, _mm256_loadu_ps(shift + i)));
    }
    for (; i < n; ++i) {
      const float p = x[i] * scale[i];
      dst[i] = p + shift[i];
    }
  } else {
    for (; i + kLanes <= n; i += kLanes) {
      _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(scale + i)));
    }
    for (; i < n; ++i) dst[i] = x[i] * scale[i];
  }
}

namespace {

template <ActivationKind Fn>
inline __m256 apply(__m256 v, __m256 alpha) {
  const __m256 zero = _mm256_setzero_ps();
  if constexpr (Fn == ActivationKind::kRelu) {
    return _mm256_max_ps(v, zero);
  } else if constexpr (Fn == ActivationKind::kRelu6) {
    return _mm256_min_ps(_mm256_max_ps(v, zero), _mm256_set1_ps(6.0f));
  } else if constexpr (Fn == ActivationKind::kLeakyRelu) {
    const __m256 pos = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
    return _mm256_blendv_ps(_mm256_mul_ps(alpha, v), v, pos);
  } else {
    return v;
  }
}

template <ActivationKind Fn>
float piecewise_delta(float alpha, const float* acc, const float* trunc, const float* dx,
                      float* sum, float* out, std::size_t n, bool first_frame) {
  const __m256 va = _mm256_set1_ps(alpha);
  __m256 vm = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256 a = _mm256_loadu_ps(acc + i);
    const __m256 s = _mm256_add_ps(_mm256_add_ps(a, _mm256_loadu_ps(trunc + i)),
                                   _mm256_loadu_ps(dx + i));
    _mm256_storeu_ps(sum + i, s);
    const __m256 prev = first_frame ? _mm256_setzero_ps() : apply<Fn>(a, va);
    const __m256 d = _mm256_sub_ps(apply<Fn>(s, va), prev);
    _mm256_storeu_ps(out + i, d);
    vm = _mm256_max_ps(vm, abs_ps(d));
  }
  float m = n >= kLanes ? hmax(vm) : 0.0f;
  if (i < n) {
    m = std::max(m, scalar::activation_delta(Fn, alpha, acc + i, trunc + i, dx + i, sum + i,
                                             out + i, n - i, first_frame));
  }
  return m;
}

}  // namespace

float activation_delta(ActivationKind fn, float alpha, const float* acc, const float* trunc,
                       const float* dx, float* sum, float* out, std::size_t n,
                       bool first_frame) {
  switch (fn) {
    case ActivationKind::kRelu:
      return piecewise_delta<ActivationKind::kRelu>(alpha, acc, trunc, dx, sum, out, n, first_frame);
    case ActivationKind::kRelu6:
      return piecewise_delta<ActivationKind::kRelu6>(alpha, acc, trunc, dx, sum, out, n, first_frame);
    case ActivationKind::kLeakyRelu:
      return piecewise_delta<ActivationKind::kLeakyRelu>(alpha, acc, trunc, dx, sum, out, n, first_frame);
    case ActivationKind::kIdentity:
      return piecewise_delta<ActivationKind::kIdentity>(alpha, acc, trunc, dx, sum, out, n, first_frame);
    default:
      return scalar::activation_delta(fn, alpha, acc, trunc, dx, sum, out, n, first_frame);
  }
}

}  // namespace avx2

const KernelTable* avx2_table_impl() {
  static const KernelTable table{Isa::kAvx2,     "avx2",       &avx2::gemv_acc,
                                 &avx2::mul_acc, &avx2::add,   &avx2::sub,
                                 &avx2::max_abs, &avx2::scale_shift,
                                 &avx2::activation_delta};
  return &table;
}

}  // namespace deltainfer::kernels
