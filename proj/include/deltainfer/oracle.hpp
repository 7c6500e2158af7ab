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

#include <vector>

#include "deltainfer/graph.hpp"
#include "deltainfer/layers.hpp"
#include "deltainfer/tensor.hpp"

namespace deltainfer::oracle {

// Textbook direct convolution over the original weight layout, double
// accumulation, bias applied. Zero padding.
FeatureTensor dense_conv2d(const FeatureTensor& x, const ConvParams& params);
FeatureTensor dense_conv2d_nobias(const FeatureTensor& x, const ConvParams& params);

FeatureTensor dense_activation(const FeatureTensor& x, ActivationKind fn, float alpha);
FeatureTensor dense_pool(const FeatureTensor& x, const PoolParams& params);
FeatureTensor dense_upsample(const FeatureTensor& x, std::size_t factor, UpsampleMode mode);
FeatureTensor dense_affine(const FeatureTensor& x, const std::vector<float>& scale,
                           const std::vector<float>& shift);
FeatureTensor dense_add(const FeatureTensor& a, const FeatureTensor& b);
FeatureTensor dense_concat(const std::vector<const FeatureTensor*>& inputs);

// Stateless evaluation of the whole graph: biases every frame, no masks and
// no truncation.
FeatureTensor dense_run_frame(const ModelGraph& graph, const FeatureTensor& frame);

// Every layer's dense output, indexed like graph.layers().
std::vector<FeatureTensor> dense_run_all(const ModelGraph& graph, const FeatureTensor& frame);

}  // namespace deltainfer::oracle
