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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace deltainfer::testing {

FeatureTensor random_tensor(const Shape& s, Rng& rng, float lo, float hi) {
  std::uniform_real_distribution<float> d(lo, hi);
  FeatureTensor t(s);
  for (float& v : t.data()) v = d(rng);
  return t;
}

UpdateMask random_mask(std::size_t b, std::size_t h, std::size_t w, double density, Rng& rng) {
  std::bernoulli_distribution d(density);
  UpdateMask m(b, h, w);
  for (std::size_t i = 0; i < m.size(); ++i) m.set_flat(i, d(rng));
  return m;
}

SparseTensor random_sparse(const Shape& s, double density, Rng& rng) {
  SparseTensor t{random_tensor(s, rng), random_mask(s.batch, s.height, s.width, density, rng)};
  for (std::size_t p = 0; p < t.mask.size(); ++p) {
    if (!t.mask[p]) std::fill_n(t.delta.pixel(p), s.channels, 0.0f);
  }
  return t;
}

namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

ConvParams conv_params(Rng& rng, std::size_t cin, std::size_t cout, ConvGeometry g, std::size_t groups) {
  ConvParams p;
  p.geometry = g;
  p.groups = groups;
  p.in_channels = cin;
  p.out_channels = cout;
  const double fan_in = static_cast<double>(g.kernel_h * g.kernel_w * (cin / groups));
  std::normal_distribution<float> w(0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
  p.weights.resize(cout * g.kernel_h * g.kernel_w * (cin / groups));
  for (float& v : p.weights) v = w(rng);
  if (coin(rng, 0.8)) {
    std::uniform_real_distribution<float> b(-0.2f, 0.2f);
    p.bias.resize(cout);
    for (float& v : p.bias) v = b(rng);
  }
  return p;
}

std::size_t add_conv(GraphBuilder& b, Rng& rng, std::size_t src, std::size_t max_channels,
                     const std::string& name, std::optional<std::size_t> force_cout = {},
                     bool same_spatial = false) {
  const Shape s = b.shape(src);
  ConvGeometry g;
  const std::size_t kernels[] = {1, 3, 3, 5};
  g.kernel_h = kernels[pick(rng, 0, 3)];
  g.kernel_w = coin(rng, 0.85) ? g.kernel_h : kernels[pick(rng, 0, 3)];
  g.dilation = (g.kernel_h > 1 && coin(rng, 0.2)) ? 2 : 1;
  g.stride = (!same_spatial && s.height >= 8 && s.width >= 8 && coin(rng, 0.25)) ? 2 : 1;
  const std::size_t ph = (g.kernel_h / 2) * g.dilation;
  const std::size_t pw = (g.kernel_w / 2) * g.dilation;
  g.padding = (same_spatial || coin(rng, 0.7)) ? std::max(ph, pw) : 0;
  if (same_spatial) {
    g.kernel_w = g.kernel_h;
    g.padding = ph;
  }
  const std::size_t span_h = (g.kernel_h - 1) * g.dilation + 1;
  const std::size_t span_w = (g.kernel_w - 1) * g.dilation + 1;
  if (s.height + 2 * g.padding < span_h || s.width + 2 * g.padding < span_w) {
    g.kernel_h = g.kernel_w = 1;
    g.dilation = 1;
    g.padding = 0;
  }
  std::size_t cout = force_cout.value_or(pick(rng, 1, max_channels));
  std::size_t groups = 1;
  if (coin(rng, 0.15) && (!force_cout || *force_cout == s.channels) && s.channels > 1) {
    groups = s.channels;
    cout = s.channels;
  } else if (coin(rng, 0.15) && s.channels % 2 == 0 && cout % 2 == 0) {
    groups = 2;
  }
  std::optional<TileSpec> tile;
  if (coin(rng, 0.3)) tile = TileSpec{pick(rng, 1, 9), pick(rng, 1, 9)};
  return b.conv(name, conv_params(rng, s.channels, cout, g, groups), tile, src);
}

}  // namespace

ModelGraph random_graph(Rng& rng, const RandomGraphOptions& o) {
  const Shape in{1, pick(rng, o.min_size, o.max_size), pick(rng, o.min_size, o.max_size),
                 pick(rng, 1, std::min<std::size_t>(4, o.max_channels))};
  GraphBuilder b("random", in, 0.0f, coin(rng, 0.2) ? 1 : 0);
  const std::size_t target = pick(rng, o.min_layers, o.max_layers);
  std::size_t made = 0;
  std::size_t id = 0;
  auto name = [&](const char* kind) { return std::string(kind) + std::to_string(id++); };
  auto source = [&]() { return coin(rng, 0.7) ? b.last() : pick(rng, 0, b.last()); };

  while (made < target) {
    const std::size_t src = source();
    const Shape s = b.shape(src);
    const std::size_t op = pick(rng, 0, 99);
    if (op < 35) {
      add_conv(b, rng, src, o.max_channels, name("conv"));
      ++made;
    } else if (op < 60) {
      const ActivationKind kinds[] = {ActivationKind::kRelu, ActivationKind::kRelu6, ActivationKind::kLeakyRelu,
                                      ActivationKind::kSigmoid, ActivationKind::kSwish, ActivationKind::kIdentity};
      b.activation(name("act"), kinds[pick(rng, 0, 5)], 0.0f, 0.1f, src);
      ++made;
    } else if (op < 68) {
      PoolParams p;
      const std::size_t variant = pick(rng, 0, 9);
      if (variant == 0) {
        p.kind = PoolKind::kGlobalAvg;
      } else {
        p.kind = coin(rng, 0.5) ? PoolKind::kMax : PoolKind::kAvg;
        if (coin(rng, 0.5) && s.height >= 2 && s.width >= 2) {
          p.kernel = 2;
          p.stride = 2;
          p.padding = 0;
        } else {
          p.kernel = 3;
          p.stride = 1;
          p.padding = 1;
        }
      }
      b.pool(name("pool"), p, src);
      ++made;
    } else if (op < 74) {
      if (s.height * 2 > o.max_size || s.width * 2 > o.max_size) continue;
      b.upsample(name("up"), 2, coin(rng, 0.5) ? UpsampleMode::kNearest : UpsampleMode::kBilinear, src);
      ++made;
    } else if (op < 80) {
      std::uniform_real_distribution<float> sc(0.5f, 1.5f);
      std::uniform_real_distribution<float> sh(-0.3f, 0.3f);
      std::vector<float> scale(s.channels);
      std::vector<float> shift(s.channels);
      for (auto& v : scale) v = sc(rng);
      for (auto& v : shift) v = sh(rng);
      b.affine(name("affine"), scale, shift, src);
      ++made;
    } else if (op < 90) {
      std::vector<std::size_t> same;
      for (std::size_t i = 0; i <= b.last(); ++i) {
        if (i != src && b.shape(i) == s) same.push_back(i);
      }
      std::size_t other;
      if (!same.empty() && coin(rng, 0.5)) {
        other = same[pick(rng, 0, same.size() - 1)];
      } else {
        other = add_conv(b, rng, src, o.max_channels, name("res"), s.channels, true);
        ++made;
      }
      b.add(name("add"), src, other);
      ++made;
    } else {
      std::vector<std::size_t> ins{src};
      std::size_t channels = s.channels;
      for (std::size_t i = 0; i <= b.last(); ++i) {
        const Shape& t = b.shape(i);
        if (i != src && t.same_spatial(s) && channels + t.channels <= o.max_channels && coin(rng, 0.4)) {
          ins.push_back(i);
          channels += t.channels;
        }
      }
      if (ins.size() == 1) {
        if (channels >= o.max_channels) continue;
        ins.push_back(add_conv(b, rng, src, o.max_channels, name("branch"), pick(rng, 1, o.max_channels - channels), true));
        ++made;
      }
      b.concat(name("concat"), ins);
      ++made;
    }
  }
  return b.finish();
}

std::vector<FeatureTensor> random_video(const Shape& s, std::size_t frames, Rng& rng) {
  std::vector<FeatureTensor> out;
  out.push_back(random_tensor(s, rng));
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  while (out.size() < frames) {
    FeatureTensor f = out.back();
    if (!coin(rng, 0.1)) {
      const std::size_t h = pick(rng, 1, std::max<std::size_t>(1, s.height / 3));
      const std::size_t w = pick(rng, 1, std::max<std::size_t>(1, s.width / 3));
      const std::size_t y0 = pick(rng, 0, s.height - h);
      const std::size_t x0 = pick(rng, 0, s.width - w);
      for (std::size_t y = y0; y < y0 + h; ++y)
        for (std::size_t x = x0; x < x0 + w; ++x)
          for (std::size_t c = 0; c < s.channels; ++c) f.at(0, y, x, c) = val(rng);
      const std::size_t scattered = pick(rng, 0, 4);
      for (std::size_t k = 0; k < scattered; ++k) {
        const std::size_t p = pick(rng, 0, s.pixels() - 1);
        for (std::size_t c = 0; c < s.channels; ++c) f.pixel(p)[c] = val(rng);
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

double max_relative(const FeatureTensor& a, const FeatureTensor& b) {
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::fabs(static_cast<double>(a.data()[i]) - b.data()[i]));
    ref = std::max(ref, std::fabs(static_cast<double>(b.data()[i])));
  }
  return diff / (ref + 1e-12);
}

bool bit_equal(const FeatureTensor& a, const FeatureTensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

namespace {

bool reads(std::size_t o, std::size_t i, std::size_t k, std::size_t stride, std::size_t dil, std::size_t pad) {
  for (std::size_t t = 0; t < k; ++t) {
    if (static_cast<long>(o * stride + t * dil) - static_cast<long>(pad) == static_cast<long>(i)) return true;
  }
  return false;
}

}  // namespace

UpdateMask brute_dilate_conv(const UpdateMask& m, const ConvGeometry& g) {
  const std::size_t oh = g.output_height(m.height());
  const std::size_t ow = g.output_width(m.width());
  UpdateMask out(m.batch(), oh, ow);
  for (std::size_t b = 0; b < m.batch(); ++b)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        bool any = false;
        for (std::size_t iy = 0; iy < m.height() && !any; ++iy)
          for (std::size_t ix = 0; ix < m.width() && !any; ++ix)
            any = m.get(b, iy, ix) && reads(oy, iy, g.kernel_h, g.stride, g.dilation, g.padding) &&
                  reads(ox, ix, g.kernel_w, g.stride, g.dilation, g.padding);
        out.set(b, oy, ox, any);
      }
  return out;
}

UpdateMask brute_dilate_radius(const UpdateMask& m, std::size_t radius) {
  UpdateMask out(m.batch(), m.height(), m.width());
  const long r = static_cast<long>(radius);
  for (std::size_t b = 0; b < m.batch(); ++b)
    for (long y = 0; y < static_cast<long>(m.height()); ++y)
      for (long x = 0; x < static_cast<long>(m.width()); ++x) {
        bool any = false;
        for (long dy = -r; dy <= r; ++dy)
          for (long dx = -r; dx <= r; ++dx) {
            const long yy = y + dy;
            const long xx = x + dx;
            if (yy >= 0 && xx >= 0 && yy < static_cast<long>(m.height()) && xx < static_cast<long>(m.width()) &&
                m.get(b, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)))
              any = true;
          }
        out.set(b, static_cast<std::size_t>(y), static_cast<std::size_t>(x), any);
      }
  return out;
}

std::size_t brute_tile_count(const UpdateMask& m, std::size_t b, const ConvGeometry& g, std::size_t oy0,
                             std::size_t oy1, std::size_t ox0, std::size_t ox1) {
  std::size_t n = 0;
  for (std::size_t iy = 0; iy < m.height(); ++iy)
    for (std::size_t ix = 0; ix < m.width(); ++ix) {
      if (!m.get(b, iy, ix)) continue;
      bool read = false;
      for (std::size_t oy = oy0; oy < oy1 && !read; ++oy)
        for (std::size_t ox = ox0; ox < ox1 && !read; ++ox)
          read = reads(oy, iy, g.kernel_h, g.stride, g.dilation, g.padding) &&
                 reads(ox, ix, g.kernel_w, g.stride, g.dilation, g.padding);
      if (read) ++n;
    }
  return n;
}

ConvRecount recount_conv(const UpdateMask& in, const ConvParams& p, const Shape& is, const TileSpec& tile,
                         std::size_t very_sparse_max) {
  const ConvGeometry& g = p.geometry;
  const std::size_t oh = g.output_height(is.height);
  const std::size_t ow = g.output_width(is.width);
  const std::uint64_t per_pair = static_cast<std::uint64_t>(p.in_per_group()) * p.out_channels;
  const UpdateMask out_mask = brute_dilate_conv(in, g);
  ConvRecount r;
  auto tap_in = [](std::size_t o, std::size_t k, std::size_t s, std::size_t d, std::size_t pad, std::size_t n,
                   long& i) {
    i = static_cast<long>(o * s + k * d) - static_cast<long>(pad);
    return i >= 0 && i < static_cast<long>(n);
  };
  for (std::size_t b = 0; b < is.batch; ++b) {
    for (std::size_t oy0 = 0; oy0 < oh; oy0 += tile.tile_height) {
      for (std::size_t ox0 = 0; ox0 < ow; ox0 += tile.tile_width) {
        const std::size_t oy1 = std::min(oy0 + tile.tile_height, oh);
        const std::size_t ox1 = std::min(ox0 + tile.tile_width, ow);
        ++r.tiles_total;
        std::uint64_t dense = 0;
        std::uint64_t pairs = 0;
        std::uint64_t dw_taps = 0;
        for (std::size_t oy = oy0; oy < oy1; ++oy)
          for (std::size_t ox = ox0; ox < ox1; ++ox)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                long iy, ix;
                if (!tap_in(oy, ky, g.stride, g.dilation, g.padding, is.height, iy)) continue;
                if (!tap_in(ox, kx, g.stride, g.dilation, g.padding, is.width, ix)) continue;
                ++dense;
                const bool active = in.get(b, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                if (active) ++pairs;
                if (active && out_mask.get(b, oy, ox)) ++dw_taps;
              }
        r.dense_macs += dense * per_pair;
        const std::size_t count = brute_tile_count(in, b, g, oy0, oy1, ox0, ox1);
        if (count == 0) {
          ++r.skipped;
          continue;
        }
        if (count <= very_sparse_max) {
          ++r.very_sparse;
        } else {
          ++r.dense;
        }
        if (p.depthwise()) {
          r.macs += dw_taps * p.out_channels;
        } else {
          r.macs += (count <= very_sparse_max ? pairs : dense) * per_pair;
        }
      }
    }
  }
  return r;
}

ConvRecount recount_graph(const ModelGraph& graph) {
  ConvRecount total;
  const std::size_t vsm = graph.options().dense_mode ? 0 : graph.options().dispatch.very_sparse_max;
  for (std::size_t i = 0; i < graph.layers().size(); ++i) {
    const Layer& l = graph.layer(i);
    if (l.kind != LayerKind::kConv) continue;
    const ConvPlan& plan = *std::get<ConvLayer>(l.params).plan;
    const ConvRecount r = recount_conv(graph.layer_output(l.inputs[0]).mask, plan.params(), plan.in_shape(),
                                       plan.tile(), vsm);
    total.tiles_total += r.tiles_total;
    total.skipped += r.skipped;
    total.very_sparse += r.very_sparse;
    total.dense += r.dense;
    total.macs += r.macs;
    total.dense_macs += r.dense_macs;
  }
  return total;
}

}  // namespace deltainfer::testing
