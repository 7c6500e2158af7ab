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
#include <string>

#include "deltainfer/error.hpp"
#include "deltainfer/layers.hpp"
#include "deltainfer/parallel.hpp"
#include "layer_common.hpp"

namespace deltainfer {

void ConvParams::validate() const {
  const auto& g = geometry;
  if (g.kernel_h == 0 || g.kernel_w == 0 || g.stride == 0 || g.dilation == 0) {
    throw ParamError("conv: kernel, stride and dilation must be at least 1");
  }
  if (groups == 0 || in_channels == 0 || out_channels == 0) {
    throw ParamError("conv: channel and group counts must be at least 1");
  }
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw ParamError("conv: groups (" + std::to_string(groups) +
                     ") must divide in_channels and out_channels");
  }
  const std::size_t expect = out_channels * g.kernel_h * g.kernel_w * in_per_group();
  if (weights.size() != expect) {
    throw ParamError("conv: expected " + std::to_string(expect) + " weights, got " +
                     std::to_string(weights.size()));
  }
  if (!bias.empty() && bias.size() != out_channels) {
    throw ParamError("conv: bias length must equal out_channels");
  }
}

ConvPlan::ConvPlan(ConvParams params, const Shape& in_shape, TileSpec tile)
    : params_(std::move(params)), in_shape_(in_shape), tile_(tile) {
  params_.validate();
  if (in_shape_.channels != params_.in_channels) {
    throw ShapeError("conv: input has " + std::to_string(in_shape_.channels) +
                     " channels, layer expects " + std::to_string(params_.in_channels));
  }
  const ConvGeometry& g = params_.geometry;
  out_shape_ = Shape{in_shape_.batch, g.output_height(in_shape_.height),
                     g.output_width(in_shape_.width), params_.out_channels};
  grid_ = TileGrid::over(out_shape_.height, out_shape_.width, tile_);

  const std::size_t kh = g.kernel_h;
  const std::size_t kw = g.kernel_w;
  const std::size_t cig = params_.in_per_group();
  const std::size_t cog = params_.out_per_group();
  if (params_.depthwise()) {
    packed_.resize(kh * kw * params_.out_channels);
    for (std::size_t ky = 0; ky < kh; ++ky)
      for (std::size_t kx = 0; kx < kw; ++kx)
        for (std::size_t c = 0; c < params_.out_channels; ++c)
          packed_[(ky * kw + kx) * params_.out_channels + c] = params_.weight(c, ky, kx, 0);
  } else {
    packed_.resize(params_.groups * kh * kw * cig * cog);
    for (std::size_t grp = 0; grp < params_.groups; ++grp)
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx)
          for (std::size_t ci = 0; ci < cig; ++ci)
            for (std::size_t co = 0; co < cog; ++co)
              packed_[(((grp * kh + ky) * kw + kx) * cig + ci) * cog + co] =
                  params_.weight(grp * cog + co, ky, kx, ci);
  }

  auto in_bounds_taps = [](std::size_t o, std::size_t k, std::size_t s, std::size_t d,
                           std::size_t p, std::size_t in) {
    std::uint64_t n = 0;
    for (std::size_t t = 0; t < k; ++t) {
      const long i = static_cast<long>(o * s + t * d) - static_cast<long>(p);
      if (i >= 0 && i < static_cast<long>(in)) ++n;
    }
    return n;
  };
  const std::uint64_t per_tap = static_cast<std::uint64_t>(cig) * params_.out_channels;
  windows_.reserve(grid_.count());
  tile_dense_macs_.reserve(grid_.count());
  for (std::size_t ty = 0; ty < grid_.rows; ++ty) {
    for (std::size_t tx = 0; tx < grid_.cols; ++tx) {
      const std::size_t y0 = ty * tile_.tile_height;
      const std::size_t y1 = std::min(y0 + tile_.tile_height, out_shape_.height);
      const std::size_t x0 = tx * tile_.tile_width;
      const std::size_t x1 = std::min(x0 + tile_.tile_width, out_shape_.width);
      windows_.push_back(conv_input_window(g, in_shape_.height, in_shape_.width, y0, y1, x0, x1));
      std::uint64_t rows = 0;
      std::uint64_t cols = 0;
      for (std::size_t y = y0; y < y1; ++y)
        rows += in_bounds_taps(y, kh, g.stride, g.dilation, g.padding, in_shape_.height);
      for (std::size_t x = x0; x < x1; ++x)
        cols += in_bounds_taps(x, kw, g.stride, g.dilation, g.padding, in_shape_.width);
      tile_dense_macs_.push_back(rows * cols * per_tap);
      dense_macs_ += tile_dense_macs_.back();
    }
  }
  dense_macs_ *= in_shape_.batch;
}

const float* ConvPlan::packed_tap(std::size_t g, std::size_t ky, std::size_t kx) const {
  const auto& geo = params_.geometry;
  return packed_.data() + ((g * geo.kernel_h + ky) * geo.kernel_w + kx) * params_.in_per_group() *
                              params_.out_per_group();
}

const float* ConvPlan::depthwise_tap(std::size_t ky, std::size_t kx) const {
  return packed_.data() + (ky * params_.geometry.kernel_w + kx) * params_.out_channels;
}

namespace {

struct TileResult {
  TileMode mode = TileMode::kSkip;
  std::uint64_t macs = 0;
  std::uint64_t bytes = 0;
};

struct Scratch {
  std::vector<float> window;
  std::vector<float> acc;
  std::vector<std::uint8_t> out_mask;
  std::vector<std::pair<std::size_t, std::size_t>> active;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

// Kernel tap index k with o*stride - pad + k*dil == i, or -1.
inline long tap_for(std::size_t o, std::size_t i, const ConvGeometry& g, std::size_t k) {
  const long off = static_cast<long>(i) + static_cast<long>(g.padding) -
                   static_cast<long>(o * g.stride);
  if (off < 0 || off % static_cast<long>(g.dilation) != 0) return -1;
  const long t = off / static_cast<long>(g.dilation);
  return t < static_cast<long>(k) ? t : -1;
}

class ConvRunner {
 public:
  ConvRunner(const SparseTensor& in, const ConvPlan& plan, bool first_frame, SparseTensor& out,
             const kernels::KernelTable& kt, const DispatchConfig& dispatch)
      : in_(in), plan_(plan), first_(first_frame), out_(out), kt_(kt), dispatch_(dispatch) {}

  TileResult run(std::size_t b, std::size_t t) {
    const TileSpec& ts = plan_.tile();
    const TileGrid& grid = plan_.grid();
    const Shape& os = plan_.out_shape();
    oy0_ = (t / grid.cols) * ts.tile_height;
    oy1_ = std::min(oy0_ + ts.tile_height, os.height);
    ox0_ = (t % grid.cols) * ts.tile_width;
    ox1_ = std::min(ox0_ + ts.tile_width, os.width);
    b_ = b;
    const InputWindow& win = plan_.window(t);

    TileResult r;
    const std::size_t active = tile_active_count(in_.mask, b, win);
    r.mode = select_tile_mode(active, dispatch_);
    // Outputs that see only padding still need their bias on the first frame.
    if (first_ && r.mode == TileMode::kSkip) r.mode = TileMode::kDense;
    r.bytes = win.rows.size() * win.cols.size();  // mask reads
    if (r.mode == TileMode::kSkip) {
      for (std::size_t y = oy0_; y < oy1_; ++y)
        for (std::size_t x = ox0_; x < ox1_; ++x) out_.mask.set(b, y, x, false);
      return r;
    }
    write_output_mask();
    if (plan_.params().depthwise()) {
      depthwise(r);
    } else if (r.mode == TileMode::kDense) {
      dense(win, t, r);
    } else {
      very_sparse(win, r);
    }
    return r;
  }

 private:
  void write_output_mask() {
    const ConvGeometry& g = plan_.params().geometry;
    const Shape& is = plan_.in_shape();
    auto& om = scratch().out_mask;
    om.assign((oy1_ - oy0_) * (ox1_ - ox0_), 0);
    for (std::size_t y = oy0_; y < oy1_; ++y) {
      for (std::size_t x = ox0_; x < ox1_; ++x) {
        bool v = first_;
        for (std::size_t ky = 0; ky < g.kernel_h && !v; ++ky) {
          const long iy = static_cast<long>(y * g.stride + ky * g.dilation) -
                          static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(is.height)) continue;
          for (std::size_t kx = 0; kx < g.kernel_w && !v; ++kx) {
            const long ix = static_cast<long>(x * g.stride + kx * g.dilation) -
                            static_cast<long>(g.padding);
            if (ix < 0 || ix >= static_cast<long>(is.width)) continue;
            v = in_.mask.get(b_, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
          }
        }
        om[(y - oy0_) * (ox1_ - ox0_) + (x - ox0_)] = v ? 1 : 0;
        out_.mask.set(b_, y, x, v);
      }
    }
  }

  void init_acc(float* acc) const {
    const ConvParams& p = plan_.params();
    if (first_ && !p.bias.empty()) {
      // +0.0f turns a -0 bias into +0 so both tile paths start identically.
      for (std::size_t o = 0; o < p.out_channels; ++o) acc[o] = p.bias[o] + 0.0f;
    } else {
      std::fill_n(acc, p.out_channels, 0.0f);
    }
  }

  std::size_t store_active_outputs(const float* acc) {
    const std::size_t cout = plan_.params().out_channels;
    const auto& om = scratch().out_mask;
    const std::size_t tw = ox1_ - ox0_;
    std::size_t n = 0;
    for (std::size_t y = oy0_; y < oy1_; ++y) {
      for (std::size_t x = ox0_; x < ox1_; ++x) {
        const std::size_t local = (y - oy0_) * tw + (x - ox0_);
        if (!om[local]) continue;
        std::copy_n(acc + local * cout, cout, out_.delta.pixel(b_, y, x));
        ++n;
      }
    }
    return n;
  }

  void dense(const InputWindow& win, std::size_t t, TileResult& r) {
    const ConvParams& p = plan_.params();
    const ConvGeometry& g = p.geometry;
    const Shape& is = plan_.in_shape();
    const std::size_t cin = p.in_channels;
    const std::size_t cout = p.out_channels;
    const std::size_t cig = p.in_per_group();
    const std::size_t cog = p.out_per_group();
    const std::size_t bh = win.box_height();
    const std::size_t bw = win.box_width();
    Scratch& s = scratch();

    // Stage the whole input box; padding and inactive pixels become zeros.
    s.window.assign(bh * bw * cin, 0.0f);
    std::size_t loaded = 0;
    for (std::size_t wy = 0; wy < bh; ++wy) {
      const long iy = win.row_begin + static_cast<long>(wy);
      if (iy < 0 || iy >= static_cast<long>(is.height)) continue;
      for (std::size_t wx = 0; wx < bw; ++wx) {
        const long ix = win.col_begin + static_cast<long>(wx);
        if (ix < 0 || ix >= static_cast<long>(is.width)) continue;
        const auto uy = static_cast<std::size_t>(iy);
        const auto ux = static_cast<std::size_t>(ix);
        if (!in_.mask.get(b_, uy, ux)) continue;
        std::copy_n(in_.delta.pixel(b_, uy, ux), cin, s.window.data() + (wy * bw + wx) * cin);
        ++loaded;
      }
    }

    const std::size_t th = oy1_ - oy0_;
    const std::size_t tw = ox1_ - ox0_;
    s.acc.resize(th * tw * cout);
    for (std::size_t ly = 0; ly < th; ++ly) {
      for (std::size_t lx = 0; lx < tw; ++lx) {
        float* acc = s.acc.data() + (ly * tw + lx) * cout;
        init_acc(acc);
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const std::size_t wy = ly * g.stride + ky * g.dilation;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const std::size_t wx = lx * g.stride + kx * g.dilation;
            const float* xp = s.window.data() + (wy * bw + wx) * cin;
            for (std::size_t grp = 0; grp < p.groups; ++grp) {
              kt_.gemv_acc(acc + grp * cog, xp + grp * cig, plan_.packed_tap(grp, ky, kx), cig, cog);
            }
          }
        }
      }
    }
    const std::size_t written = store_active_outputs(s.acc.data());
    r.macs = plan_.tile_dense_macs(t);
    r.bytes += (loaded * cin + g.kernel_h * g.kernel_w * cig * cout + written * cout) * 4;
  }

  void very_sparse(const InputWindow& win, TileResult& r) {
    const ConvParams& p = plan_.params();
    const ConvGeometry& g = p.geometry;
    const std::size_t cin = p.in_channels;
    const std::size_t cout = p.out_channels;
    const std::size_t cig = p.in_per_group();
    const std::size_t cog = p.out_per_group();
    const std::size_t th = oy1_ - oy0_;
    const std::size_t tw = ox1_ - ox0_;
    Scratch& s = scratch();

    // Row-major gather, which visits each output's taps in (ky, kx) order.
    s.active.clear();
    for (std::size_t y : win.rows)
      for (std::size_t x : win.cols)
        if (in_.mask.get(b_, y, x)) s.active.emplace_back(y, x);

    s.acc.resize(th * tw * cout);
    for (std::size_t i = 0; i < th * tw; ++i) init_acc(s.acc.data() + i * cout);

    const std::size_t ntaps = g.kernel_h * g.kernel_w;
    std::uint64_t used_taps = 0;  // bitset of touched weight slices, first 64 taps
    std::size_t pairs = 0;
    for (const auto& [iy, ix] : s.active) {
      const float* xp = in_.delta.pixel(b_, iy, ix);
      for (std::size_t oy = oy0_; oy < oy1_; ++oy) {
        const long ky = tap_for(oy, iy, g, g.kernel_h);
        if (ky < 0) continue;
        for (std::size_t ox = ox0_; ox < ox1_; ++ox) {
          const long kx = tap_for(ox, ix, g, g.kernel_w);
          if (kx < 0) continue;
          float* acc = s.acc.data() + ((oy - oy0_) * tw + (ox - ox0_)) * cout;
          const auto uky = static_cast<std::size_t>(ky);
          const auto ukx = static_cast<std::size_t>(kx);
          for (std::size_t grp = 0; grp < p.groups; ++grp) {
            kt_.gemv_acc(acc + grp * cog, xp + grp * cig, plan_.packed_tap(grp, uky, ukx), cig, cog);
          }
          ++pairs;
          const std::size_t tap = uky * g.kernel_w + ukx;
          if (tap < 64) used_taps |= std::uint64_t{1} << tap;
        }
      }
    }
    const std::size_t written = store_active_outputs(s.acc.data());
    const std::size_t slices = ntaps <= 64 ? static_cast<std::size_t>(__builtin_popcountll(used_taps))
                                           : ntaps;
    r.macs = static_cast<std::uint64_t>(pairs) * cig * cout;
    r.bytes += (s.active.size() * cin + slices * cig * cout + written * cout) * 4;
  }

  // Per-pixel sparsity: each output pixel loads and multiplies only the
  // active taps of its own receptive field.
  void depthwise(TileResult& r) {
    const ConvParams& p = plan_.params();
    const ConvGeometry& g = p.geometry;
    const Shape& is = plan_.in_shape();
    const std::size_t c = p.out_channels;
    const auto& om = scratch().out_mask;
    const std::size_t tw = ox1_ - ox0_;
    std::vector<float>& acc = scratch().acc;
    acc.resize(c);
    std::size_t taps = 0;
    std::size_t written = 0;
    for (std::size_t y = oy0_; y < oy1_; ++y) {
      for (std::size_t x = ox0_; x < ox1_; ++x) {
        if (!om[(y - oy0_) * tw + (x - ox0_)]) continue;
        init_acc(acc.data());
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const long iy = static_cast<long>(y * g.stride + ky * g.dilation) -
                          static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(is.height)) continue;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const long ix = static_cast<long>(x * g.stride + kx * g.dilation) -
                            static_cast<long>(g.padding);
            if (ix < 0 || ix >= static_cast<long>(is.width)) continue;
            const auto uy = static_cast<std::size_t>(iy);
            const auto ux = static_cast<std::size_t>(ix);
            if (!in_.mask.get(b_, uy, ux)) continue;
            kt_.mul_acc(acc.data(), in_.delta.pixel(b_, uy, ux), plan_.depthwise_tap(ky, kx), c);
            ++taps;
          }
        }
        std::copy_n(acc.data(), c, out_.delta.pixel(b_, y, x));
        ++written;
      }
    }
    r.macs = static_cast<std::uint64_t>(taps) * c;
    r.bytes += (taps * 2 * c + written * c) * 4;
  }

  const SparseTensor& in_;
  const ConvPlan& plan_;
  bool first_;
  SparseTensor& out_;
  const kernels::KernelTable& kt_;
  const DispatchConfig& dispatch_;
  std::size_t b_ = 0;
  std::size_t oy0_ = 0, oy1_ = 0, ox0_ = 0, ox1_ = 0;
};

}  // namespace

void sparse_conv2d(const SparseTensor& in, const ConvPlan& plan, bool first_frame,
                   SparseTensor& out, const ExecContext& ctx, LayerStats* stats) {
  if (in.delta.shape() != plan.in_shape()) {
    throw ShapeError("conv: input shape " + to_string(in.delta.shape()) + " does not match " +
                     to_string(plan.in_shape()));
  }
  if (!in.mask.matches(in.delta.shape())) throw ShapeError("conv: mask does not match input");
  const Shape& os = plan.out_shape();
  out.delta.reshape(os);
  out.mask.reshape(os.batch, os.height, os.width);

  const std::size_t per_image = plan.tiles_per_image();
  const std::size_t n = plan.tiles_total();
  std::vector<TileResult> results(n);
  const kernels::KernelTable& kt = ctx.table();
  auto body = [&](std::size_t i) {
    ConvRunner runner(in, plan, first_frame, out, kt, ctx.dispatch);
    results[i] = runner.run(i / per_image, i % per_image);
  };
  if (ctx.pool) {
    ctx.pool->parallel_for(n, body);
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }

  if (stats) {
    stats->tiles_total += n;
    stats->tile_macs.reserve(stats->tile_macs.size() + n);
    for (const TileResult& r : results) {
      switch (r.mode) {
        case TileMode::kSkip:
          ++stats->tiles_skipped;
          break;
        case TileMode::kVerySparse:
          ++stats->tiles_very_sparse;
          break;
        case TileMode::kDense:
          ++stats->tiles_dense;
          break;
      }
      stats->mac_performed += r.macs;
      stats->bytes_touched_estimate += r.bytes;
      stats->tile_macs.push_back(r.macs);
    }
    stats->mac_dense_equivalent += plan.dense_macs();
    record_mask(*stats, out.mask);
  }
}

}  // namespace deltainfer
