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
#include <string>
#include <vector>

namespace deltainfer {

// Counters for one layer over one frame. MACs are analytic per dispatched
// tile; bytes_touched_estimate is elements read or written times four.
struct LayerStats {
  std::string name;
  std::string kind;
  std::size_t tiles_total = 0;
  std::size_t tiles_skipped = 0;
  std::size_t tiles_very_sparse = 0;
  std::size_t tiles_dense = 0;
  std::uint64_t mac_performed = 0;
  std::uint64_t mac_dense_equivalent = 0;
  std::uint64_t bytes_touched_estimate = 0;
  std::size_t active_pixels = 0;  // output mask
  std::size_t total_pixels = 0;
  // Per-tile MAC counts for conv layers, in tile order.
  std::vector<std::uint64_t> tile_macs;

  double mask_density() const {
    return total_pixels ? static_cast<double>(active_pixels) / static_cast<double>(total_pixels)
                        : 0.0;
  }
  std::size_t tiles_processed() const { return tiles_very_sparse + tiles_dense; }
};

struct RunStats {
  std::size_t frame_index = 0;
  bool dense_frame = false;
  double wall_seconds = 0.0;
  std::vector<LayerStats> layers;
  // Engine-wide counter, accumulated independently of the per-layer sums.
  std::uint64_t mac_performed_total = 0;

  std::size_t tiles_total() const;
  std::size_t tiles_processed() const;
  std::uint64_t mac_performed() const;
  std::uint64_t mac_dense_equivalent() const;
};

}  // namespace deltainfer
