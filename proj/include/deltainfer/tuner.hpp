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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deltainfer/graph.hpp"

namespace deltainfer {

struct TuneConfig {
  // Allowed loss increase summed over all truncation layers, in loss units.
  double total_budget = 0.03;
  float start_epsilon = 1e-4f;
  float step_factor = 2.0f;
  float max_epsilon = 8.0f;
  // Largest tolerated loss decrease relative to the layer's reference.
  double accuracy_gain_cap = 0.01;
  // Frame sources (see io::ingest_frames) used by the path-based overload.
  std::vector<std::string> calibration;

  void validate() const;
};

// Maps delta-engine outputs and dense-oracle outputs of every calibration
// frame to a non-negative scalar. Labels, if any, are bound by the caller.
using LossFn = std::function<double(std::span<const FeatureTensor> delta,
                                    std::span<const FeatureTensor> dense)>;

// Per-frame ||delta - dense||_1 / ||dense||_1, averaged over frames.
double mean_relative_l1(std::span<const FeatureTensor> delta, std::span<const FeatureTensor> dense);

struct TuneTrial {
  float epsilon = 0.0f;
  double loss = 0.0;
  double increase = 0.0;
  bool passed = false;
  // Mean mask density of the layer's output over non-initial frames.
  double density = 0.0;
};

struct LayerTuneResult {
  std::string name;
  std::size_t layer = 0;
  float epsilon = 0.0f;
  double reference_loss = 0.0;
  double final_loss = 0.0;
  double density = 0.0;
  std::vector<TuneTrial> trajectory;
};

struct TuneReport {
  double total_budget = 0.0;
  double per_layer_budget = 0.0;
  double baseline_loss = 0.0;
  double final_loss = 0.0;
  std::size_t calibration_frames = 0;
  std::size_t evaluations = 0;
  std::vector<LayerTuneResult> layers;
};

struct TuneResult {
  // One epsilon per truncation layer, in execution order.
  std::vector<float> epsilons;
  TuneReport report;
};

// Front-to-back search: each truncation layer's epsilon grows geometrically
// from start_epsilon while the loss increase over the layer's reference
// (earlier layers frozen, later layers at zero) stays within
// total_budget / N and the loss decrease within accuracy_gain_cap, followed by
// one bisection step between the last passing and first failing value.
TuneResult tune(const ModelGraph& graph, const TuneConfig& config,
                const std::vector<std::vector<FeatureTensor>>& calibration,
                const LossFn& loss = mean_relative_l1);

// Loads config.calibration with the default normalisation.
TuneResult tune(const ModelGraph& graph, const TuneConfig& config,
                const LossFn& loss = mean_relative_l1);

}  // namespace deltainfer
