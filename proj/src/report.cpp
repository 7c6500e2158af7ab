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

#include "deltainfer/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "deltainfer/error.hpp"
#include "deltainfer/io.hpp"
#include "deltainfer/manifest.hpp"
#include "deltainfer/oracle.hpp"

namespace deltainfer::report {

namespace fs = std::filesystem;

namespace {

double fraction(double num, double den) { return den > 0.0 ? num / den : 0.0; }

json shape_json(const Shape& s) { return json::array({s.batch, s.height, s.width, s.channels}); }

struct Totals {
  std::size_t tiles_total = 0;
  std::size_t tiles_skipped = 0;
  std::size_t tiles_very_sparse = 0;
  std::size_t tiles_dense = 0;
  std::uint64_t mac_performed = 0;
  std::uint64_t mac_dense_equivalent = 0;
  std::uint64_t bytes = 0;
  std::size_t active_pixels = 0;
  std::size_t total_pixels = 0;
  std::size_t frames = 0;
  double seconds = 0.0;

  void add(const LayerStats& s) {
    tiles_total += s.tiles_total;
    tiles_skipped += s.tiles_skipped;
    tiles_very_sparse += s.tiles_very_sparse;
    tiles_dense += s.tiles_dense;
    mac_performed += s.mac_performed;
    mac_dense_equivalent += s.mac_dense_equivalent;
    bytes += s.bytes_touched_estimate;
    active_pixels += s.active_pixels;
    total_pixels += s.total_pixels;
  }

  json to_json(bool timing) const {
    json j{{"frames", frames},
           {"tiles_total", tiles_total},
           {"tiles_skipped", tiles_skipped},
           {"tiles_very_sparse", tiles_very_sparse},
           {"tiles_dense", tiles_dense},
           {"tiles_processed", tiles_very_sparse + tiles_dense},
           {"processed_tile_fraction",
            fraction(static_cast<double>(tiles_very_sparse + tiles_dense), static_cast<double>(tiles_total))},
           {"mac_performed", mac_performed},
           {"mac_dense_equivalent", mac_dense_equivalent},
           {"mac_fraction", fraction(static_cast<double>(mac_performed), static_cast<double>(mac_dense_equivalent))},
           {"bytes_touched_estimate", bytes},
           {"mask_density", fraction(static_cast<double>(active_pixels), static_cast<double>(total_pixels))}};
    if (timing) j["wall_seconds"] = seconds;
    return j;
  }
};

}  // namespace

std::vector<RunStats> run_sequence(ModelGraph& graph, const std::vector<FeatureTensor>& frames,
                                   const std::optional<fs::path>& out_dir) {
  if (out_dir) fs::create_directories(*out_dir);
  std::vector<RunStats> stats;
  stats.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    FrameResult r = graph.run_frame(frames[i]);
    if (out_dir) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%05zu.dct", i);
      io::write_tensor(*out_dir / name, r.output);
    }
    stats.push_back(std::move(r.stats));
  }
  return stats;
}

json layer_json(const LayerStats& s) {
  return json{{"name", s.name},
              {"kind", s.kind},
              {"tiles_total", s.tiles_total},
              {"tiles_skipped", s.tiles_skipped},
              {"tiles_very_sparse", s.tiles_very_sparse},
              {"tiles_dense", s.tiles_dense},
              {"mac_performed", s.mac_performed},
              {"mac_dense_equivalent", s.mac_dense_equivalent},
              {"bytes_touched_estimate", s.bytes_touched_estimate},
              {"active_pixels", s.active_pixels},
              {"total_pixels", s.total_pixels},
              {"mask_density", s.mask_density()}};
}

json frame_json(const RunStats& s, bool timing) {
  json layers = json::array();
  for (const auto& l : s.layers) layers.push_back(layer_json(l));
  json j{{"frame", s.frame_index},
         {"dense_frame", s.dense_frame},
         {"tiles_total", s.tiles_total()},
         {"tiles_processed", s.tiles_processed()},
         {"processed_tile_fraction",
          fraction(static_cast<double>(s.tiles_processed()), static_cast<double>(s.tiles_total()))},
         {"mac_performed", s.mac_performed()},
         {"mac_performed_total", s.mac_performed_total},
         {"mac_dense_equivalent", s.mac_dense_equivalent()},
         {"mac_fraction",
          fraction(static_cast<double>(s.mac_performed()), static_cast<double>(s.mac_dense_equivalent()))},
         {"layers", std::move(layers)}};
  if (timing) j["wall_seconds"] = s.wall_seconds;
  return j;
}

json run_report(const ModelGraph& graph, const std::vector<RunStats>& frames, bool timing) {
  Totals all;
  Totals steady;
  std::vector<Totals> per_layer(graph.layers().size());
  json per_frame = json::array();
  for (const RunStats& f : frames) {
    ++all.frames;
    all.seconds += f.wall_seconds;
    if (!f.dense_frame) {
      ++steady.frames;
      steady.seconds += f.wall_seconds;
    }
    for (std::size_t i = 0; i < f.layers.size(); ++i) {
      all.add(f.layers[i]);
      if (!f.dense_frame) steady.add(f.layers[i]);
      per_layer.at(i).add(f.layers[i]);
      ++per_layer[i].frames;
    }
    per_frame.push_back(frame_json(f, timing));
  }
  json layers = json::array();
  for (std::size_t i = 0; i < graph.layers().size(); ++i) {
    json l = per_layer[i].to_json(false);
    l.erase("frames");
    l["name"] = graph.layer(i).name;
    l["kind"] = layer_kind_name(graph.layer(i).kind);
    layers.push_back(std::move(l));
  }
  const RunOptions& o = graph.options();
  return json{{"report", "run"},
              {"model", graph.name()},
              {"frames", frames.size()},
              {"threads", o.threads},
              {"dense_mode", o.dense_mode},
              {"reset_interval", o.reset_interval},
              {"bytes_touched_is_estimate", true},
              {"aggregate", all.to_json(timing)},
              {"steady_state", steady.to_json(timing)},
              {"layers", std::move(layers)},
              {"per_frame", std::move(per_frame)}};
}

FrameDeviation deviation(const FeatureTensor& delta, const FeatureTensor& dense) {
  if (delta.shape() != dense.shape()) throw ShapeError("deviation: shape mismatch");
  const auto d = delta.data();
  const auto o = dense.data();
  double max_diff = 0.0;
  double sum_diff = 0.0;
  double max_ref = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double diff = std::fabs(static_cast<double>(d[i]) - o[i]);
    max_diff = std::max(max_diff, diff);
    sum_diff += diff;
    max_ref = std::max(max_ref, std::fabs(static_cast<double>(o[i])));
  }
  const double denom = max_ref + 1e-12;
  const double n = d.empty() ? 1.0 : static_cast<double>(d.size());
  return {max_diff / denom, sum_diff / n / denom};
}

DriftSummary analyze_drift(const std::vector<double>& series, std::size_t window) {
  DriftSummary s;
  s.window = window == 0 ? 1 : window;
  const std::size_t n = series.size();
  for (double v : series) s.max_deviation = std::max(s.max_deviation, v);
  if (n >= 2) {
    const double mx = static_cast<double>(n - 1) / 2.0;
    double my = 0.0;
    for (double v : series) my += v;
    my /= static_cast<double>(n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = static_cast<double>(i) - mx;
      num += dx * (series[i] - my);
      den += dx * dx;
    }
    s.slope = num / den;
  }
  for (std::size_t b = 0; b < n; b += s.window) {
    double m = 0.0;
    for (std::size_t i = b; i < std::min(n, b + s.window); ++i) m = std::max(m, series[i]);
    s.window_max.push_back(m);
  }
  if (s.window_max.size() >= 3) {
    s.monotone_growth = true;
    for (std::size_t i = 1; i < s.window_max.size(); ++i) {
      if (!(s.window_max[i] > s.window_max[i - 1])) s.monotone_growth = false;
    }
  }
  return s;
}

CompareReport compare_sequence(ModelGraph& graph, const std::vector<FeatureTensor>& frames,
                               std::size_t drift_window) {
  CompareReport r;
  std::vector<double> series;
  for (const auto& f : frames) {
    const FeatureTensor out = graph.run_frame(f).output;
    r.frames.push_back(deviation(out, oracle::dense_run_frame(graph, f)));
    series.push_back(r.frames.back().max_relative);
  }
  r.drift = analyze_drift(series, drift_window);
  return r;
}

json compare_json(const ModelGraph& graph, const CompareReport& report) {
  json per_frame = json::array();
  double mean_of_max = 0.0;
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    per_frame.push_back({{"frame", i},
                         {"max_relative", report.frames[i].max_relative},
                         {"mean_relative", report.frames[i].mean_relative}});
    mean_of_max += report.frames[i].max_relative;
  }
  if (!report.frames.empty()) mean_of_max /= static_cast<double>(report.frames.size());
  const DriftSummary& d = report.drift;
  return json{{"report", "compare"},
              {"model", graph.name()},
              {"frames", report.frames.size()},
              {"dense_mode", graph.options().dense_mode},
              {"max_relative", d.max_deviation},
              {"mean_max_relative", mean_of_max},
              {"per_frame", std::move(per_frame)},
              {"drift",
               {{"window", d.window},
                {"slope", d.slope},
                {"window_max", d.window_max},
                {"monotone_growth", d.monotone_growth}}}};
}

namespace {

template <class F>
BenchTiming time_frames(std::size_t count, std::size_t warmup, std::size_t repetitions,
                        const F& before_repetition, const F& frame) {
  using clock = std::chrono::steady_clock;
  BenchTiming t;
  for (std::size_t r = 0; r < repetitions; ++r) {
    before_repetition(0);
    for (std::size_t i = 0; i < count; ++i) {
      const auto start = clock::now();
      frame(i);
      const auto stop = clock::now();
      if (i >= warmup) {
        t.seconds += std::chrono::duration<double>(stop - start).count();
        ++t.frames_timed;
      }
    }
  }
  return t;
}

}  // namespace

BenchResult bench(const ModelGraph& graph, const std::vector<FeatureTensor>& frames,
                  const BenchOptions& options) {
  if (frames.size() <= options.warmup) throw ValueError("bench: need more frames than warm-up frames");
  if (options.repetitions == 0) throw ValueError("bench: repetitions must be positive");
  BenchResult r;
  r.frames = frames.size();
  r.repetitions = options.repetitions;
  r.warmup = options.warmup;
  r.threads = graph.options().threads;

  auto run_engine = [&](bool dense) {
    ModelGraph g = graph;
    g.options().dense_mode = dense;
    std::function<void(std::size_t)> reset = [&](std::size_t) { g.reset_buffers(); };
    std::function<void(std::size_t)> step = [&](std::size_t i) { g.run_frame(frames[i]); };
    return time_frames(frames.size(), options.warmup, options.repetitions, reset, step);
  };
  r.delta = run_engine(false);
  if (options.include_dense_mode) r.delta_dense = run_engine(true);
  if (options.include_oracle) {
    std::function<void(std::size_t)> none = [](std::size_t) {};
    std::function<void(std::size_t)> step = [&](std::size_t i) {
      volatile float sink = oracle::dense_run_frame(graph, frames[i]).data()[0];
      (void)sink;
    };
    r.oracle = time_frames(frames.size(), options.warmup, options.repetitions, none, step);
  }
  return r;
}

json bench_json(const ModelGraph& graph, const BenchResult& r) {
  auto timing = [](const BenchTiming& t) {
    return json{{"frames_timed", t.frames_timed}, {"seconds", t.seconds}, {"fps", t.fps()}};
  };
  json j{{"report", "bench"},
         {"model", graph.name()},
         {"frames", r.frames},
         {"repetitions", r.repetitions},
         {"warmup_frames", r.warmup},
         {"threads", r.threads},
         {"isa", graph.options().kernels ? graph.options().kernels->name : kernels::active().name},
         {"delta", timing(r.delta)}};
  json speedup = json::object();
  if (r.oracle) {
    j["oracle"] = timing(*r.oracle);
    speedup["delta_vs_oracle"] = fraction(r.delta.fps(), r.oracle->fps());
  }
  if (r.delta_dense) {
    j["delta_dense"] = timing(*r.delta_dense);
    speedup["delta_vs_dense_mode"] = fraction(r.delta.fps(), r.delta_dense->fps());
  }
  if (r.oracle && r.delta_dense) {
    speedup["dense_mode_vs_oracle"] = fraction(r.delta_dense->fps(), r.oracle->fps());
  }
  j["speedup"] = std::move(speedup);
  return j;
}

json tune_json(const ModelGraph& graph, const TuneConfig& config, const TuneResult& result) {
  const TuneReport& rep = result.report;
  json layers = json::array();
  for (const LayerTuneResult& l : rep.layers) {
    json traj = json::array();
    for (const TuneTrial& t : l.trajectory) {
      traj.push_back({{"epsilon", t.epsilon},
                      {"loss", t.loss},
                      {"increase", t.increase},
                      {"passed", t.passed},
                      {"density", t.density}});
    }
    layers.push_back({{"name", l.name},
                      {"layer", l.layer},
                      {"epsilon", l.epsilon},
                      {"reference_loss", l.reference_loss},
                      {"final_loss", l.final_loss},
                      {"increase", l.final_loss - l.reference_loss},
                      {"density", l.density},
                      {"trajectory", std::move(traj)}});
  }
  return json{{"report", "tune"},
              {"model", graph.name()},
              {"config",
               {{"total_budget", config.total_budget},
                {"start_epsilon", config.start_epsilon},
                {"step_factor", config.step_factor},
                {"max_epsilon", config.max_epsilon},
                {"accuracy_gain_cap", config.accuracy_gain_cap}}},
              {"calibration_frames", rep.calibration_frames},
              {"evaluations", rep.evaluations},
              {"per_layer_budget", rep.per_layer_budget},
              {"baseline_loss", rep.baseline_loss},
              {"final_loss", rep.final_loss},
              {"total_increase", rep.final_loss - rep.baseline_loss},
              {"epsilons", result.epsilons},
              {"layers", std::move(layers)}};
}

json model_json(const ModelGraph& graph) {
  json layers = json::array();
  for (const Layer& l : graph.layers()) {
    json ins = json::array();
    for (std::size_t k : l.inputs) ins.push_back(graph.layer(k).name);
    json j{{"name", l.name}, {"kind", layer_kind_name(l.kind)}, {"inputs", ins}, {"shape", shape_json(l.out_shape)}};
    if (const auto* in = std::get_if<InputLayer>(&l.params)) {
      j["epsilon"] = in->epsilon;
      j["dilation"] = in->dilation_radius;
    } else if (const auto* a = std::get_if<ActivationLayer>(&l.params)) {
      j["fn"] = activation_name(a->fn);
      j["epsilon"] = a->epsilon;
    } else if (const auto* c = std::get_if<ConvLayer>(&l.params)) {
      const ConvPlan& p = *c->plan;
      const ConvGeometry& g = p.params().geometry;
      j["kernel"] = {g.kernel_h, g.kernel_w};
      j["stride"] = g.stride;
      j["dilation"] = g.dilation;
      j["padding"] = g.padding;
      j["groups"] = p.params().groups;
      j["tile"] = {p.tile().tile_height, p.tile().tile_width};
      j["tiles"] = p.tiles_total();
      j["mac_dense"] = p.dense_macs();
    }
    layers.push_back(std::move(j));
  }
  return json{{"report", "model"},
              {"model", graph.name()},
              {"input_shape", shape_json(graph.input_shape())},
              {"output_shape", shape_json(graph.output_shape())},
              {"dense_macs_per_frame", graph.dense_macs_per_frame()},
              {"layers", std::move(layers)}};
}

json strip_timing(json j) {
  if (j.is_object()) {
    for (const char* key : {"wall_seconds", "seconds", "fps"}) j.erase(key);
    for (auto& [k, v] : j.items()) v = strip_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

}  // namespace deltainfer::report
