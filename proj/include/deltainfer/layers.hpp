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
#include <cstdint>
#include <span>
#include <vector>

#include "deltainfer/kernels.hpp"
#include "deltainfer/mask.hpp"
#include "deltainfer/stats.hpp"
#include "deltainfer/tensor.hpp"

namespace deltainfer {

class ThreadPool;

// A delta tensor together with the mask telling which pixels are valid.
struct SparseTensor {
  FeatureTensor delta;
  UpdateMask mask;
};

// Caches of a nonlinear layer. `accumulated` is the current dense-equivalent
// input; `truncated` holds deltas withheld since the pixel's last emitted
// update and is only allocated at truncation points.
struct LayerState {
  FeatureTensor accumulated;
  FeatureTensor truncated;
  bool bias_applied = false;

  static LayerState zeros(const Shape& shape, bool with_truncation);
  bool has_truncation() const { return truncated.size() != 0; }
  void reset();
};

enum class TileMode : std::uint8_t { kSkip, kVerySparse, kDense };

// Active-input thresholds for the hybrid convolution. Tiles with no active
// input are skipped, up to very_sparse_max go through the gathered
// active-pixel path, the rest through the unconditional dense path.
struct DispatchConfig {
  std::size_t very_sparse_max = 4;
};

TileMode select_tile_mode(std::size_t active_inputs, const DispatchConfig& cfg);
const char* tile_mode_name(TileMode m);

struct ExecContext {
  const kernels::KernelTable* kernels = nullptr;  // nullptr: kernels::active()
  ThreadPool* pool = nullptr;                     // nullptr: serial
  DispatchConfig dispatch{};

  const kernels::KernelTable& table() const;
};

// ---------------------------------------------------------------------------
// Convolution

// Weights are ordered out-channel, kernel-row, kernel-col, in-channel within
// the group. groups == in_channels == out_channels selects the depthwise path.
struct ConvParams {
  ConvGeometry geometry;
  std::size_t groups = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<float> weights;
  std::vector<float> bias;  // empty when absent

  std::size_t in_per_group() const { return in_channels / groups; }
  std::size_t out_per_group() const { return out_channels / groups; }
  bool depthwise() const { return groups > 1 && groups == in_channels && groups == out_channels; }
  float weight(std::size_t co, std::size_t ky, std::size_t kx, std::size_t ci_in_group) const {
    return weights[((co * geometry.kernel_h + ky) * geometry.kernel_w + kx) * in_per_group() +
                   ci_in_group];
  }
  // Throws ParamError on inconsistent sizes.
  void validate() const;
};

// Everything about a convolution that is fixed once the input shape is known:
// repacked weights, tile grid, per-tile input windows and dense MAC counts.
class ConvPlan {
 public:
  ConvPlan(ConvParams params, const Shape& in_shape, TileSpec tile);

  const ConvParams& params() const { return params_; }
  const Shape& in_shape() const { return in_shape_; }
  const Shape& out_shape() const { return out_shape_; }
  const TileSpec& tile() const { return tile_; }
  const TileGrid& grid() const { return grid_; }
  std::size_t tiles_per_image() const { return grid_.count(); }
  std::size_t tiles_total() const { return grid_.count() * in_shape_.batch; }
  const InputWindow& window(std::size_t tile_index) const { return windows_[tile_index]; }
  // MACs of the unconditional dense path over one tile, in-bounds taps only.
  std::uint64_t tile_dense_macs(std::size_t tile_index) const { return tile_dense_macs_[tile_index]; }
  std::uint64_t dense_macs() const { return dense_macs_; }

  // Weights for tap (ky, kx) of group g: in_per_group rows of out_per_group.
  const float* packed_tap(std::size_t g, std::size_t ky, std::size_t kx) const;
  // Depthwise taps: one weight per channel.
  const float* depthwise_tap(std::size_t ky, std::size_t kx) const;

 private:
  ConvParams params_;
  Shape in_shape_;
  Shape out_shape_;
  TileSpec tile_;
  TileGrid grid_;
  std::vector<float> packed_;
  std::vector<InputWindow> windows_;
  std::vector<std::uint64_t> tile_dense_macs_;
  std::uint64_t dense_macs_ = 0;
};

// Output delta at every active output pixel is the convolution of the input
// delta with inactive pixels read as zero. Bias is added only on the first
// frame, where every output pixel is active. Inactive output pixels are not
// written.
void sparse_conv2d(const SparseTensor& in, const ConvPlan& plan, bool first_frame,
                   SparseTensor& out, const ExecContext& ctx = {}, LayerStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Delta generation, activation, pooling, upsampling, elementwise

// First frame: delta = frame, mask all true. Otherwise delta = frame minus the
// last propagated input; a pixel is active when max |delta| over channels is
// non-zero and at least epsilon_in (negative epsilon: every pixel). The mask
// is then dilated by dilation_radius. The input state is advanced only at
// active pixels.
void delta_generate(const FeatureTensor& frame, LayerState& prev_input, float epsilon_in,
                    std::size_t dilation_radius, bool first_frame, SparseTensor& out,
                    const ExecContext& ctx = {}, LayerStats* stats = nullptr);

// Fused activation and truncation. Negative epsilon means never truncate.
void activate_truncate(const SparseTensor& in, LayerState& state, float epsilon,
                       ActivationKind fn, float alpha, bool first_frame, SparseTensor& out,
                       const ExecContext& ctx = {}, LayerStats* stats = nullptr);

enum class PoolKind { kMax, kAvg, kGlobalAvg };

struct PoolParams {
  PoolKind kind = PoolKind::kMax;
  std::size_t kernel = 2;
  std::size_t stride = 2;
  std::size_t padding = 0;

  ConvGeometry geometry() const { return ConvGeometry{kernel, kernel, stride, 1, padding}; }
};

Shape pool_output_shape(const Shape& in, const PoolParams& p);

// Max pooling keeps the pre-pool accumulated input in `state`; average
// pooling is linear and takes no state.
void sparse_pool(const SparseTensor& in, LayerState* state, const PoolParams& params,
                 SparseTensor& out, const ExecContext& ctx = {}, LayerStats* stats = nullptr);

enum class UpsampleMode { kNearest, kBilinear };

// Bilinear uses half-pixel centres with edge clamping. An output pixel is
// active when any of its source pixels is active; inactive sources
// contribute zero.
void sparse_upsample(const SparseTensor& in, std::size_t factor, UpsampleMode mode,
                     SparseTensor& out, const ExecContext& ctx = {},
                     LayerStats* stats = nullptr);

void sparse_affine(const SparseTensor& in, std::span<const float> scale,
                   std::span<const float> shift, bool first_frame, SparseTensor& out,
                   const ExecContext& ctx = {}, LayerStats* stats = nullptr);

void sparse_add(const SparseTensor& a, const SparseTensor& b, SparseTensor& out,
                const ExecContext& ctx = {}, LayerStats* stats = nullptr);

void sparse_concat(std::span<const SparseTensor* const> inputs, SparseTensor& out,
                   const ExecContext& ctx = {}, LayerStats* stats = nullptr);

// Adds active deltas into output_state.accumulated and returns a copy of it.
FeatureTensor dense_accumulate(const SparseTensor& in, LayerState& output_state,
                               const ExecContext& ctx = {}, LayerStats* stats = nullptr);

}  // namespace deltainfer
