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

#include "deltainfer/graph.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "deltainfer/error.hpp"
#include "deltainfer/parallel.hpp"

namespace deltainfer {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kInput:
      return "input";
    case LayerKind::kConv:
      return "conv";
    case LayerKind::kActivation:
      return "activation";
    case LayerKind::kPool:
      return "pool";
    case LayerKind::kUpsample:
      return "upsample";
    case LayerKind::kAffine:
      return "affine";
    case LayerKind::kAdd:
      return "add";
    case LayerKind::kConcat:
      return "concat";
    case LayerKind::kOutput:
      return "output";
  }
  return "?";
}

bool Layer::stateful() const {
  switch (kind) {
    case LayerKind::kInput:
    case LayerKind::kActivation:
    case LayerKind::kOutput:
      return true;
    case LayerKind::kPool:
      return std::get<PoolLayer>(params).params.kind == PoolKind::kMax;
    default:
      return false;
  }
}

std::size_t RunStats::tiles_total() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.tiles_total;
  return n;
}

std::size_t RunStats::tiles_processed() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.tiles_processed();
  return n;
}

std::uint64_t RunStats::mac_performed() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.mac_performed;
  return n;
}

std::uint64_t RunStats::mac_dense_equivalent() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.mac_dense_equivalent;
  return n;
}

// ---------------------------------------------------------------------------

ModelGraph::ModelGraph() = default;

ModelGraph::ModelGraph(std::string name, std::vector<Layer> layers)
    : name_(std::move(name)), layers_(std::move(layers)) {
  validate();
  allocate_runtime();
}

ModelGraph::ModelGraph(const ModelGraph& other)
    : name_(other.name_),
      layers_(other.layers_),
      states_(other.states_),
      buffers_(other.buffers_),
      options_(other.options_),
      frame_index_(other.frame_index_),
      frames_since_reset_(other.frames_since_reset_) {}

ModelGraph& ModelGraph::operator=(const ModelGraph& other) {
  if (this != &other) {
    ModelGraph copy(other);
    *this = std::move(copy);
  }
  return *this;
}

ModelGraph::ModelGraph(ModelGraph&&) noexcept = default;
ModelGraph& ModelGraph::operator=(ModelGraph&&) noexcept = default;
ModelGraph::~ModelGraph() = default;

void ModelGraph::validate() const {
  if (layers_.size() < 2) throw ParamError("graph needs at least an input and an output layer");
  if (layers_.front().kind != LayerKind::kInput) throw ParamError("layer 0 must be the input");
  if (layers_.back().kind != LayerKind::kOutput) throw ParamError("last layer must be the output");
  std::set<std::string> names;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (!names.insert(l.name).second) throw ParamError("duplicate layer name '" + l.name + "'");
    if (i > 0 && l.kind == LayerKind::kInput) throw ParamError("only layer 0 may be an input");
    if (i + 1 < layers_.size() && l.kind == LayerKind::kOutput) {
      throw ParamError("only the last layer may be an output");
    }
    for (std::size_t in : l.inputs) {
      if (in >= i) {
        throw ParamError("layer '" + l.name + "' consumes a layer that is not computed before it");
      }
    }
    float eps = 0.0f;
    if (const auto* a = std::get_if<ActivationLayer>(&l.params)) eps = a->epsilon;
    if (const auto* a = std::get_if<InputLayer>(&l.params)) eps = a->epsilon;
    if (std::isnan(eps) || std::isinf(eps)) {
      throw ParamError("layer '" + l.name + "' has a non-finite epsilon");
    }
  }
}

void ModelGraph::allocate_runtime() {
  states_.assign(layers_.size(), LayerState{});
  buffers_.assign(layers_.size(), SparseTensor{});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.stateful()) {
      const Shape& s = l.kind == LayerKind::kPool ? layers_[l.inputs[0]].out_shape : l.out_shape;
      states_[i] = LayerState::zeros(s, l.kind == LayerKind::kActivation);
    }
    if (l.kind != LayerKind::kOutput) {
      buffers_[i].delta = FeatureTensor(l.out_shape, 0.0f);
      buffers_[i].mask = UpdateMask::like(l.out_shape);
    }
  }
  frame_index_ = 0;
  frames_since_reset_ = 0;
}

std::optional<std::size_t> ModelGraph::find(const std::string& name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> ModelGraph::truncation_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].truncation_point()) out.push_back(i);
  }
  return out;
}

float ModelGraph::epsilon(std::size_t layer) const {
  const Layer& l = layers_.at(layer);
  if (const auto* a = std::get_if<ActivationLayer>(&l.params)) return a->epsilon;
  if (const auto* a = std::get_if<InputLayer>(&l.params)) return a->epsilon;
  throw ParamError("layer '" + l.name + "' has no epsilon");
}

void ModelGraph::set_epsilon(std::size_t layer, float epsilon) {
  if (!std::isfinite(epsilon)) throw ParamError("epsilon must be finite");
  Layer& l = layers_.at(layer);
  if (auto* a = std::get_if<ActivationLayer>(&l.params)) {
    a->epsilon = epsilon;
  } else if (auto* a = std::get_if<InputLayer>(&l.params)) {
    a->epsilon = epsilon;
  } else {
    throw ParamError("layer '" + l.name + "' has no epsilon");
  }
}

std::vector<float> ModelGraph::truncation_epsilons() const {
  std::vector<float> out;
  for (std::size_t i : truncation_layers()) out.push_back(epsilon(i));
  return out;
}

void ModelGraph::set_truncation_epsilons(const std::vector<float>& eps) {
  const auto idx = truncation_layers();
  if (eps.size() != idx.size()) throw ParamError("epsilon list length does not match truncation layers");
  for (std::size_t k = 0; k < idx.size(); ++k) set_epsilon(idx[k], eps[k]);
}

void ModelGraph::reset_buffers() {
  for (LayerState& s : states_) s.reset();
  frame_index_ = 0;
  frames_since_reset_ = 0;
}

std::uint64_t ModelGraph::dense_macs_per_frame() const {
  std::uint64_t n = 0;
  for (const Layer& l : layers_) {
    if (const auto* c = std::get_if<ConvLayer>(&l.params)) n += c->plan->dense_macs();
  }
  return n;
}

ThreadPool* ModelGraph::pool() {
  const std::size_t want = options_.threads;
  if (want <= 1) return nullptr;
  if (!pool_ || pool_->size() != want) pool_ = std::make_unique<ThreadPool>(want);
  return pool_.get();
}

namespace {

void check_active_finite(const SparseTensor& t, const Layer& layer) {
  const std::size_t c = t.delta.channels();
  for (std::size_t p = 0; p < t.mask.size(); ++p) {
    if (!t.mask[p]) continue;
    const float* v = t.delta.pixel(p);
    for (std::size_t k = 0; k < c; ++k) {
      if (!std::isfinite(v[k])) {
        throw ValueError("layer '" + layer.name + "' produced a non-finite value at an active "
                         "pixel (stale data read?)");
      }
    }
  }
}

}  // namespace

FrameResult ModelGraph::run_frame(const FeatureTensor& frame) {
  if (frame.shape() != input_shape()) {
    throw ShapeError("frame shape " + to_string(frame.shape()) + " does not match model input " +
                     to_string(input_shape()));
  }
  if (options_.reset_interval > 0 && frames_since_reset_ >= options_.reset_interval) {
    const std::size_t keep = frame_index_;
    reset_buffers();
    frame_index_ = keep;
  }
  const auto start = std::chrono::steady_clock::now();
  const bool first = frames_since_reset_ == 0;
  const bool dense = options_.dense_mode;

  ExecContext ctx;
  ctx.kernels = options_.kernels;
  ctx.pool = pool();
  ctx.dispatch = dense ? DispatchConfig{0} : options_.dispatch;

  FrameResult result;
  result.stats.frame_index = frame_index_;
  result.stats.dense_frame = first;
  result.stats.layers.reserve(layers_.size());
  const float nan = std::numeric_limits<float>::quiet_NaN();

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    LayerStats st;
    st.name = l.name;
    st.kind = layer_kind_name(l.kind);
    SparseTensor& out = buffers_[i];
    if (options_.poison && l.kind != LayerKind::kOutput) out.delta.fill(nan);
    auto in = [&](std::size_t k) -> const SparseTensor& { return buffers_[l.inputs[k]]; };

    switch (l.kind) {
      case LayerKind::kInput: {
        const auto& p = std::get<InputLayer>(l.params);
        delta_generate(frame, states_[i], dense ? -1.0f : p.epsilon, p.dilation_radius, first, out,
                       ctx, &st);
        break;
      }
      case LayerKind::kConv:
        sparse_conv2d(in(0), *std::get<ConvLayer>(l.params).plan, first, out, ctx, &st);
        break;
      case LayerKind::kActivation: {
        const auto& p = std::get<ActivationLayer>(l.params);
        activate_truncate(in(0), states_[i], dense ? -1.0f : p.epsilon, p.fn, p.alpha, first, out,
                          ctx, &st);
        break;
      }
      case LayerKind::kPool: {
        const auto& p = std::get<PoolLayer>(l.params).params;
        sparse_pool(in(0), p.kind == PoolKind::kMax ? &states_[i] : nullptr, p, out, ctx, &st);
        break;
      }
      case LayerKind::kUpsample: {
        const auto& p = std::get<UpsampleLayer>(l.params);
        sparse_upsample(in(0), p.factor, p.mode, out, ctx, &st);
        break;
      }
      case LayerKind::kAffine: {
        const auto& p = std::get<AffineLayer>(l.params);
        sparse_affine(in(0), p.scale, p.shift, first, out, ctx, &st);
        break;
      }
      case LayerKind::kAdd:
        sparse_add(in(0), in(1), out, ctx, &st);
        break;
      case LayerKind::kConcat: {
        std::vector<const SparseTensor*> ins;
        for (std::size_t k = 0; k < l.inputs.size(); ++k) ins.push_back(&in(k));
        sparse_concat(ins, out, ctx, &st);
        break;
      }
      case LayerKind::kOutput:
        result.output = dense_accumulate(in(0), states_[i], ctx, &st);
        break;
    }
    if (options_.poison && l.kind != LayerKind::kOutput) check_active_finite(out, l);
    result.stats.mac_performed_total += st.mac_performed;
    result.stats.layers.push_back(std::move(st));
  }

  result.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ++frame_index_;
  ++frames_since_reset_;
  return result;
}

// ---------------------------------------------------------------------------

void fold_batchnorm(ConvParams& conv, const BatchNormParams& bn) {
  const std::size_t co = conv.out_channels;
  if (bn.gamma.size() != co || bn.beta.size() != co || bn.mean.size() != co || bn.var.size() != co) {
    throw ParamError("batchnorm parameter length must equal conv out_channels");
  }
  const std::size_t per_out = conv.weights.size() / co;
  if (conv.bias.empty()) conv.bias.assign(co, 0.0f);
  for (std::size_t o = 0; o < co; ++o) {
    const float k = bn.gamma[o] / std::sqrt(bn.var[o] + bn.eps);
    for (std::size_t j = 0; j < per_out; ++j) conv.weights[o * per_out + j] *= k;
    conv.bias[o] = (conv.bias[o] - bn.mean[o]) * k + bn.beta[o];
  }
}

AffineLayer batchnorm_as_affine(const BatchNormParams& bn) {
  const std::size_t c = bn.gamma.size();
  if (bn.beta.size() != c || bn.mean.size() != c || bn.var.size() != c) {
    throw ParamError("batchnorm parameter lengths differ");
  }
  AffineLayer a;
  a.scale.resize(c);
  a.shift.resize(c);
  for (std::size_t o = 0; o < c; ++o) {
    a.scale[o] = bn.gamma[o] / std::sqrt(bn.var[o] + bn.eps);
    a.shift[o] = bn.beta[o] - bn.mean[o] * a.scale[o];
  }
  return a;
}

// ---------------------------------------------------------------------------

GraphBuilder::GraphBuilder(std::string model_name, Shape input_shape, float input_epsilon,
                           std::size_t dilation_radius)
    : model_name_(std::move(model_name)) {
  if (input_shape.elements() == 0) throw ShapeError("input shape must be non-empty");
  layers_.push_back(Layer{"input", LayerKind::kInput, {}, input_shape,
                          InputLayer{input_epsilon, dilation_radius}});
}

std::optional<std::size_t> GraphBuilder::find(const std::string& name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t GraphBuilder::resolve(std::optional<std::size_t> input) const {
  const std::size_t i = input.value_or(last());
  if (i >= layers_.size()) throw ParamError("layer input index out of range");
  return i;
}

std::size_t GraphBuilder::push(Layer layer) {
  if (layer.name.empty()) layer.name = std::string(layer_kind_name(layer.kind)) + std::to_string(layers_.size());
  if (find(layer.name)) throw ParamError("duplicate layer name '" + layer.name + "'");
  layers_.push_back(std::move(layer));
  return last();
}

std::size_t GraphBuilder::conv(std::string name, ConvParams params, std::optional<TileSpec> tile,
                               std::optional<std::size_t> input) {
  const std::size_t in = resolve(input);
  const auto& g = params.geometry;
  const TileSpec ts = tile.value_or(default_tile_for(g.kernel_h, g.kernel_w, g.stride));
  auto plan = std::make_shared<const ConvPlan>(std::move(params), shape(in), ts);
  const Shape os = plan->out_shape();
  return push(Layer{std::move(name), LayerKind::kConv, {in}, os, ConvLayer{std::move(plan)}});
}

std::size_t GraphBuilder::activation(std::string name, ActivationKind fn, float epsilon, float alpha,
                                     std::optional<std::size_t> input) {
  if (!std::isfinite(epsilon)) throw ParamError("layer '" + name + "' has a non-finite epsilon");
  const std::size_t in = resolve(input);
  return push(Layer{std::move(name), LayerKind::kActivation, {in}, shape(in),
                    ActivationLayer{fn, alpha, epsilon}});
}

std::size_t GraphBuilder::pool(std::string name, PoolParams params, std::optional<std::size_t> input) {
  const std::size_t in = resolve(input);
  if (params.kind != PoolKind::kGlobalAvg && (params.kernel == 0 || params.stride == 0)) {
    throw ParamError("pool: kernel and stride must be at least 1");
  }
  const Shape os = pool_output_shape(shape(in), params);
  return push(Layer{std::move(name), LayerKind::kPool, {in}, os, PoolLayer{params}});
}

std::size_t GraphBuilder::upsample(std::string name, std::size_t factor, UpsampleMode mode,
                                   std::optional<std::size_t> input) {
  const std::size_t in = resolve(input);
  if (factor == 0) throw ParamError("upsample: factor must be at least 1");
  Shape os = shape(in);
  os.height *= factor;
  os.width *= factor;
  return push(Layer{std::move(name), LayerKind::kUpsample, {in}, os, UpsampleLayer{factor, mode}});
}

std::size_t GraphBuilder::affine(std::string name, std::vector<float> scale, std::vector<float> shift,
                                 std::optional<std::size_t> input) {
  const std::size_t in = resolve(input);
  if (scale.size() != shape(in).channels || shift.size() != shape(in).channels) {
    throw ShapeError("affine: scale/shift length must equal channel count");
  }
  return push(Layer{std::move(name), LayerKind::kAffine, {in}, shape(in),
                    AffineLayer{std::move(scale), std::move(shift)}});
}

std::size_t GraphBuilder::add(std::string name, std::size_t a, std::size_t b) {
  resolve(a);
  resolve(b);
  if (shape(a) != shape(b)) {
    throw ShapeError("add: shapes " + to_string(shape(a)) + " and " + to_string(shape(b)) + " differ");
  }
  return push(Layer{std::move(name), LayerKind::kAdd, {a, b}, shape(a), AddLayer{}});
}

std::size_t GraphBuilder::concat(std::string name, std::vector<std::size_t> inputs) {
  if (inputs.empty()) throw ParamError("concat needs at least one input");
  Shape os = shape(resolve(inputs.front()));
  os.channels = 0;
  for (std::size_t i : inputs) {
    const Shape& s = shape(resolve(i));
    if (!s.same_spatial(os)) throw ShapeError("concat: spatial shapes differ");
    os.channels += s.channels;
  }
  return push(Layer{std::move(name), LayerKind::kConcat, std::move(inputs), os, ConcatLayer{}});
}

ModelGraph GraphBuilder::finish(std::optional<std::size_t> input, std::string name) {
  const std::size_t in = resolve(input);
  push(Layer{std::move(name), LayerKind::kOutput, {in}, shape(in), OutputLayer{}});
  return ModelGraph(model_name_, std::move(layers_));
}

}  // namespace deltainfer
