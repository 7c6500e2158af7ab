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
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "deltainfer/layers.hpp"
#include "deltainfer/stats.hpp"
#include "deltainfer/tensor.hpp"

namespace deltainfer {

enum class LayerKind { kInput, kConv, kActivation, kPool, kUpsample, kAffine, kAdd, kConcat, kOutput };

const char* layer_kind_name(LayerKind k);

struct InputLayer {
  float epsilon = 0.0f;
  std::size_t dilation_radius = 0;
};
struct ConvLayer {
  std::shared_ptr<const ConvPlan> plan;
};
struct ActivationLayer {
  ActivationKind fn = ActivationKind::kRelu;
  float alpha = 0.01f;  // leaky-relu slope
  float epsilon = 0.0f;
};
struct PoolLayer {
  PoolParams params;
};
struct UpsampleLayer {
  std::size_t factor = 2;
  UpsampleMode mode = UpsampleMode::kNearest;
};
struct AffineLayer {
  std::vector<float> scale;
  std::vector<float> shift;
};
struct AddLayer {};
struct ConcatLayer {};
struct OutputLayer {};

using LayerParams = std::variant<InputLayer, ConvLayer, ActivationLayer, PoolLayer, UpsampleLayer,
                                 AffineLayer, AddLayer, ConcatLayer, OutputLayer>;

struct Layer {
  std::string name;
  LayerKind kind;
  std::vector<std::size_t> inputs;
  Shape out_shape;
  LayerParams params;

  // Activations and max pooling carry state; everything else is linear.
  bool stateful() const;
  bool truncation_point() const { return kind == LayerKind::kActivation; }
};

struct RunOptions {
  std::size_t threads = 1;
  // Frames between automatic buffer resets; 0 disables.
  std::size_t reset_interval = 500;
#ifdef NDEBUG
  bool poison = false;
#else
  bool poison = true;
#endif
  // Every epsilon treated as negative and every non-empty tile dense.
  bool dense_mode = false;
  DispatchConfig dispatch{};
  const kernels::KernelTable* kernels = nullptr;
};

struct FrameResult {
  FeatureTensor output;
  RunStats stats;
};

class ThreadPool;

// Ordered layer list plus the per-stream runtime: states, delta buffers and
// the frame counter. Copies share weights but own their runtime state.
class ModelGraph {
 public:
  ModelGraph();
  ModelGraph(std::string name, std::vector<Layer> layers);
  ModelGraph(const ModelGraph& other);
  ModelGraph& operator=(const ModelGraph& other);
  ModelGraph(ModelGraph&&) noexcept;
  ModelGraph& operator=(ModelGraph&&) noexcept;
  ~ModelGraph();

  const std::string& name() const { return name_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  std::optional<std::size_t> find(const std::string& name) const;
  const Shape& input_shape() const { return layers_.front().out_shape; }
  const Shape& output_shape() const { return layers_.back().out_shape; }

  // Indices of activation layers in execution order.
  std::vector<std::size_t> truncation_layers() const;
  float epsilon(std::size_t layer) const;
  void set_epsilon(std::size_t layer, float epsilon);
  std::vector<float> truncation_epsilons() const;
  void set_truncation_epsilons(const std::vector<float>& eps);

  RunOptions& options() { return options_; }
  const RunOptions& options() const { return options_; }

  std::size_t frame_index() const { return frame_index_; }
  std::size_t frames_since_reset() const { return frames_since_reset_; }

  // Zeroes all states; the next frame runs densely.
  void reset_buffers();

  // Delta and mask produced by layer i on the most recent frame.
  const SparseTensor& layer_output(std::size_t i) const { return buffers_.at(i); }
  const LayerState& state(std::size_t i) const { return states_.at(i); }

  FrameResult run_frame(const FeatureTensor& frame);

  std::uint64_t dense_macs_per_frame() const;

 private:
  void validate() const;
  void allocate_runtime();
  ThreadPool* pool();

  std::string name_;
  std::vector<Layer> layers_;
  std::vector<LayerState> states_;
  std::vector<SparseTensor> buffers_;
  RunOptions options_;
  std::size_t frame_index_ = 0;
  std::size_t frames_since_reset_ = 0;
  std::unique_ptr<ThreadPool> pool_;
};

inline FrameResult run_frame(ModelGraph& graph, const FeatureTensor& frame) {
  return graph.run_frame(frame);
}
inline void reset_buffers(ModelGraph& graph) { graph.reset_buffers(); }

struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> mean;
  std::vector<float> var;
  float eps = 1e-5f;
};

// Folds an inference batch-norm into the preceding convolution's weights and
// bias: w' = w * g / sqrt(v + e), b' = (b - m) * g / sqrt(v + e) + beta.
void fold_batchnorm(ConvParams& conv, const BatchNormParams& bn);
// The same normalisation as a per-channel scale and shift.
AffineLayer batchnorm_as_affine(const BatchNormParams& bn);

// Builds a graph layer by layer with immediate shape inference. Layer 0 is
// the input; finish() appends the output accumulator.
class GraphBuilder {
 public:
  GraphBuilder(std::string model_name, Shape input_shape, float input_epsilon = 0.0f,
               std::size_t dilation_radius = 0);

  std::size_t last() const { return layers_.size() - 1; }
  const Shape& shape(std::size_t i) const { return layers_.at(i).out_shape; }
  std::size_t size() const { return layers_.size(); }
  std::optional<std::size_t> find(const std::string& name) const;

  std::size_t conv(std::string name, ConvParams params, std::optional<TileSpec> tile = {},
                   std::optional<std::size_t> input = {});
  std::size_t activation(std::string name, ActivationKind fn, float epsilon, float alpha = 0.01f,
                         std::optional<std::size_t> input = {});
  std::size_t pool(std::string name, PoolParams params, std::optional<std::size_t> input = {});
  std::size_t upsample(std::string name, std::size_t factor, UpsampleMode mode,
                       std::optional<std::size_t> input = {});
  std::size_t affine(std::string name, std::vector<float> scale, std::vector<float> shift,
                     std::optional<std::size_t> input = {});
  std::size_t add(std::string name, std::size_t a, std::size_t b);
  std::size_t concat(std::string name, std::vector<std::size_t> inputs);

  ModelGraph finish(std::optional<std::size_t> input = {}, std::string name = "output");

 private:
  std::size_t push(Layer layer);
  std::size_t resolve(std::optional<std::size_t> input) const;

  std::string model_name_;
  std::vector<Layer> layers_;
};

}  // namespace deltainfer
