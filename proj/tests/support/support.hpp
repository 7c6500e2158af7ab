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

#include <cstdint>
#include <random>
#include <vector>

#include "deltainfer/graph.hpp"
#include "deltainfer/layers.hpp"
#include "deltainfer/mask.hpp"
#include "deltainfer/tensor.hpp"

namespace deltainfer::testing {

using Rng = std::mt19937;

FeatureTensor random_tensor(const Shape& s, Rng& rng, float lo = -1.0f, float hi = 1.0f);
UpdateMask random_mask(std::size_t b, std::size_t h, std::size_t w, double density, Rng& rng);
// Random values at active pixels, zeros elsewhere.
SparseTensor random_sparse(const Shape& s, double density, Rng& rng);

struct RandomGraphOptions {
  std::size_t min_layers = 3;
  std::size_t max_layers = 10;
  std::size_t max_size = 64;
  std::size_t max_channels = 16;
  std::size_t min_size = 4;
};

// Random DAG over every layer kind with all epsilons at zero.
ModelGraph random_graph(Rng& rng, const RandomGraphOptions& options = {});

// Random first frame, then frames that redraw a random rectangle and a few
// scattered pixels; roughly one frame in ten repeats its predecessor.
std::vector<FeatureTensor> random_video(const Shape& s, std::size_t frames, Rng& rng);

// max |a - b| / (max |b| + 1e-12)
double max_relative(const FeatureTensor& a, const FeatureTensor& b);

bool bit_equal(const FeatureTensor& a, const FeatureTensor& b);

// Output pixel active iff any in-bounds input pixel of its receptive field is.
UpdateMask brute_dilate_conv(const UpdateMask& m, const ConvGeometry& g);
UpdateMask brute_dilate_radius(const UpdateMask& m, std::size_t radius);

// Active input pixels read by at least one output pixel of the tile.
std::size_t brute_tile_count(const UpdateMask& m, std::size_t batch, const ConvGeometry& g,
                             std::size_t oy0, std::size_t oy1, std::size_t ox0, std::size_t ox1);

// Tile modes and MACs of one conv layer, recomputed from its input mask
// alone with the documented dispatch and counting rules.
struct ConvRecount {
  std::size_t tiles_total = 0;
  std::size_t skipped = 0;
  std::size_t very_sparse = 0;
  std::size_t dense = 0;
  std::uint64_t macs = 0;
  std::uint64_t dense_macs = 0;
};

ConvRecount recount_conv(const UpdateMask& input_mask, const ConvParams& params, const Shape& in_shape,
                         const TileSpec& tile, std::size_t very_sparse_max = 4);

// Sums recount_conv over every conv layer using the masks the graph holds
// for its most recent frame.
ConvRecount recount_graph(const ModelGraph& graph);

}  // namespace deltainfer::testing
