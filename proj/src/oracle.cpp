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

#include "deltainfer/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deltainfer/error.hpp"

namespace deltainfer::oracle {

namespace {

FeatureTensor conv_impl(const FeatureTensor& x, const ConvParams& p, bool with_bias) {
  p.validate();
  if (x.channels() != p.in_channels) throw ShapeError("oracle conv: channel mismatch");
  const ConvGeometry& g = p.geometry;
  const std::size_t oh = g.output_height(x.height());
  const std::size_t ow = g.output_width(x.width());
  FeatureTensor y(Shape{x.batch(), oh, ow, p.out_channels});
  const std::size_t cig = p.in_per_group();
  const std::size_t cog = p.out_per_group();
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        for (std::size_t co = 0; co < p.out_channels; ++co) {
          const std::size_t grp = co / cog;
          double acc = (with_bias && !p.bias.empty()) ? p.bias[co] : 0.0;
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            const long iy = static_cast<long>(oy * g.stride + ky * g.dilation) -
                            static_cast<long>(g.padding);
            if (iy < 0 || iy >= static_cast<long>(x.height())) continue;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const long ix = static_cast<long>(ox * g.stride + kx * g.dilation) -
                              static_cast<long>(g.padding);
              if (ix < 0 || ix >= static_cast<long>(x.width())) continue;
              for (std::size_t ci = 0; ci < cig; ++ci) {
                acc += static_cast<double>(x.at(b, static_cast<std::size_t>(iy),
                                                static_cast<std::size_t>(ix), grp * cig + ci)) *
                       static_cast<double>(p.weight(co, ky, kx, ci));
              }
            }
          }
          y.at(b, oy, ox, co) = static_cast<float>(acc);
        }
      }
    }
  }
  return y;
}

float act(ActivationKind fn, float alpha, float v) {
  switch (fn) {
    case ActivationKind::kRelu:
      return std::max(v, 0.0f);
    case ActivationKind::kRelu6:
      return std::min(std::max(v, 0.0f), 6.0f);
    case ActivationKind::kLeakyRelu:
      return v >= 0.0f ? v : alpha * v;
    case ActivationKind::kSigmoid:
      return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
    case ActivationKind::kSwish:
      return static_cast<float>(v / (1.0 + std::exp(-static_cast<double>(v))));
    case ActivationKind::kIdentity:
      return v;
  }
  return v;
}

}  // namespace

FeatureTensor dense_conv2d(const FeatureTensor& x, const ConvParams& params) {
  return conv_impl(x, params, true);
}

FeatureTensor dense_conv2d_nobias(const FeatureTensor& x, const ConvParams& params) {
  return conv_impl(x, params, false);
}

FeatureTensor dense_activation(const FeatureTensor& x, ActivationKind fn, float alpha) {
  FeatureTensor y = x;
  for (float& v : y.data()) v = act(fn, alpha, v);
  return y;
}

FeatureTensor dense_pool(const FeatureTensor& x, const PoolParams& p) {
  const Shape& s = x.shape();
  if (p.kind == PoolKind::kGlobalAvg) {
    FeatureTensor y(Shape{s.batch, 1, 1, s.channels});
    for (std::size_t b = 0; b < s.batch; ++b) {
      for (std::size_t c = 0; c < s.channels; ++c) {
        double acc = 0.0;
        for (std::size_t yy = 0; yy < s.height; ++yy)
          for (std::size_t xx = 0; xx < s.width; ++xx) acc += x.at(b, yy, xx, c);
        y.at(b, 0, 0, c) = static_cast<float>(acc / static_cast<double>(s.height * s.width));
      }
    }
    return y;
  }
  const ConvGeometry g = p.geometry();
  const std::size_t oh = g.output_height(s.height);
  const std::size_t ow = g.output_width(s.width);
  FeatureTensor y(Shape{s.batch, oh, ow, s.channels});
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        for (std::size_t c = 0; c < s.channels; ++c) {
          double acc = 0.0;
          float mx = -std::numeric_limits<float>::infinity();
          for (std::size_t ky = 0; ky < p.kernel; ++ky) {
            const long iy = static_cast<long>(oy * p.stride + ky) - static_cast<long>(p.padding);
            if (iy < 0 || iy >= static_cast<long>(s.height)) continue;
            for (std::size_t kx = 0; kx < p.kernel; ++kx) {
              const long ix = static_cast<long>(ox * p.stride + kx) - static_cast<long>(p.padding);
              if (ix < 0 || ix >= static_cast<long>(s.width)) continue;
              const float v = x.at(b, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), c);
              acc += v;
              mx = std::max(mx, v);
            }
          }
          // Average pooling divides by the full window (padding counted).
          y.at(b, oy, ox, c) = p.kind == PoolKind::kMax
                                   ? (std::isinf(mx) ? 0.0f : mx)
                                   : static_cast<float>(acc / static_cast<double>(p.kernel * p.kernel));
        }
      }
    }
  }
  return y;
}

FeatureTensor dense_upsample(const FeatureTensor& x, std::size_t factor, UpsampleMode mode) {
  const Shape& s = x.shape();
  FeatureTensor y(Shape{s.batch, s.height * factor, s.width * factor, s.channels});
  auto coord = [&](std::size_t o, std::size_t in, std::size_t& lo, std::size_t& hi, double& frac) {
    double src = (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
    src = std::max(src, 0.0);
    lo = std::min(static_cast<std::size_t>(src), in - 1);
    hi = std::min(lo + 1, in - 1);
    frac = src - static_cast<double>(lo);
  };
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t oy = 0; oy < y.height(); ++oy) {
      for (std::size_t ox = 0; ox < y.width(); ++ox) {
        for (std::size_t c = 0; c < s.channels; ++c) {
          if (mode == UpsampleMode::kNearest) {
            y.at(b, oy, ox, c) = x.at(b, oy / factor, ox / factor, c);
            continue;
          }
          std::size_t y0, y1, x0, x1;
          double fy, fx;
          coord(oy, s.height, y0, y1, fy);
          coord(ox, s.width, x0, x1, fx);
          const double top = (1 - fx) * x.at(b, y0, x0, c) + fx * x.at(b, y0, x1, c);
          const double bot = (1 - fx) * x.at(b, y1, x0, c) + fx * x.at(b, y1, x1, c);
          y.at(b, oy, ox, c) = static_cast<float>((1 - fy) * top + fy * bot);
        }
      }
    }
  }
  return y;
}

FeatureTensor dense_affine(const FeatureTensor& x, const std::vector<float>& scale,
                           const std::vector<float>& shift) {
  FeatureTensor y = x;
  const std::size_t c = x.channels();
  auto d = y.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = d[i] * scale[i % c] + shift[i % c];
  return y;
}

FeatureTensor dense_add(const FeatureTensor& a, const FeatureTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("oracle add: shape mismatch");
  FeatureTensor y = a;
  auto d = y.data();
  auto e = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += e[i];
  return y;
}

FeatureTensor dense_concat(const std::vector<const FeatureTensor*>& inputs) {
  Shape s = inputs.front()->shape();
  s.channels = 0;
  for (const auto* t : inputs) s.channels += t->channels();
  FeatureTensor y(s);
  for (std::size_t p = 0; p < s.pixels(); ++p) {
    float* dst = y.pixel(p);
    for (const auto* t : inputs) {
      std::copy_n(t->pixel(p), t->channels(), dst);
      dst += t->channels();
    }
  }
  return y;
}

std::vector<FeatureTensor> dense_run_all(const ModelGraph& graph, const FeatureTensor& frame) {
  if (frame.shape() != graph.input_shape()) throw ShapeError("oracle: frame shape mismatch");
  for (float v : frame.data()) {
    if (!std::isfinite(v)) throw ValueError("oracle: frame contains non-finite values");
  }
  const auto& layers = graph.layers();
  std::vector<FeatureTensor> out(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    auto in = [&](std::size_t k) -> const FeatureTensor& { return out[l.inputs[k]]; };
    switch (l.kind) {
      case LayerKind::kInput:
        out[i] = frame;
        break;
      case LayerKind::kConv:
        out[i] = dense_conv2d(in(0), std::get<ConvLayer>(l.params).plan->params());
        break;
      case LayerKind::kActivation: {
        const auto& a = std::get<ActivationLayer>(l.params);
        out[i] = dense_activation(in(0), a.fn, a.alpha);
        break;
      }
      case LayerKind::kPool:
        out[i] = dense_pool(in(0), std::get<PoolLayer>(l.params).params);
        break;
      case LayerKind::kUpsample: {
        const auto& u = std::get<UpsampleLayer>(l.params);
        out[i] = dense_upsample(in(0), u.factor, u.mode);
        break;
      }
      case LayerKind::kAffine: {
        const auto& a = std::get<AffineLayer>(l.params);
        out[i] = dense_affine(in(0), a.scale, a.shift);
        break;
      }
      case LayerKind::kAdd:
        out[i] = dense_add(in(0), in(1));
        break;
      case LayerKind::kConcat: {
        std::vector<const FeatureTensor*> ins;
        for (std::size_t k = 0; k < l.inputs.size(); ++k) ins.push_back(&in(k));
        out[i] = dense_concat(ins);
        break;
      }
      case LayerKind::kOutput:
        out[i] = in(0);
        break;
    }
  }
  return out;
}

FeatureTensor dense_run_frame(const ModelGraph& graph, const FeatureTensor& frame) {
  return std::move(dense_run_all(graph, frame).back());
}

}  // namespace deltainfer::oracle
