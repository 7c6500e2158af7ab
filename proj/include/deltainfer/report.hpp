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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deltainfer/graph.hpp"
#include "deltainfer/stats.hpp"
#include "deltainfer/tuner.hpp"

namespace deltainfer::report {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// run

// Runs the sequence from the graph's current state. When out_dir is set,
// frame i's accumulated output is written to out_dir/frame_<i>.dct.
std::vector<RunStats> run_sequence(ModelGraph& graph, const std::vector<FeatureTensor>& frames,
                                   const std::optional<std::filesystem::path>& out_dir = {});

json layer_json(const LayerStats& s);
json frame_json(const RunStats& s, bool timing = true);
// Per-layer and aggregate tile, MAC and density figures over all frames.
json run_report(const ModelGraph& graph, const std::vector<RunStats>& frames, bool timing = true);

// ---------------------------------------------------------------------------
// compare

struct FrameDeviation {
  // max |d - o| and mean |d - o|, both divided by max |o| + 1e-12.
  double max_relative = 0.0;
  double mean_relative = 0.0;
};

FrameDeviation deviation(const FeatureTensor& delta, const FeatureTensor& dense);

struct DriftSummary {
  std::size_t window = 0;
  // Least-squares slope of the per-frame max deviation, per frame.
  double slope = 0.0;
  std::vector<double> window_max;
  // True when every window's maximum exceeds the previous one (needs at least
  // three windows).
  bool monotone_growth = false;
  double max_deviation = 0.0;
};

DriftSummary analyze_drift(const std::vector<double>& series, std::size_t window);

struct CompareReport {
  std::vector<FrameDeviation> frames;
  DriftSummary drift;
};

CompareReport compare_sequence(ModelGraph& graph, const std::vector<FeatureTensor>& frames,
                               std::size_t drift_window = 50);
json compare_json(const ModelGraph& graph, const CompareReport& report);

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::size_t repetitions = 1;
  // Leading frames of each repetition that run untimed.
  std::size_t warmup = 1;
  bool include_oracle = true;
  bool include_dense_mode = true;
};

struct BenchTiming {
  std::size_t frames_timed = 0;
  double seconds = 0.0;
  double fps() const { return seconds > 0.0 ? static_cast<double>(frames_timed) / seconds : 0.0; }
};

struct BenchResult {
  std::optional<BenchTiming> oracle;
  BenchTiming delta;
  std::optional<BenchTiming> delta_dense;
  std::size_t threads = 1;
  std::size_t frames = 0;
  std::size_t repetitions = 0;
  std::size_t warmup = 0;
};

BenchResult bench(const ModelGraph& graph, const std::vector<FeatureTensor>& frames,
                  const BenchOptions& options = {});
json bench_json(const ModelGraph& graph, const BenchResult& result);

// ---------------------------------------------------------------------------
// tune / stats

json tune_json(const ModelGraph& graph, const TuneConfig& config, const TuneResult& result);
// Static model summary: shapes, epsilons, tile grids and dense MACs.
json model_json(const ModelGraph& graph);

// Removes every "wall_seconds", "seconds" and "fps" field recursively.
json strip_timing(json j);

}  // namespace deltainfer::report
