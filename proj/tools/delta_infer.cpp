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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deltainfer/error.hpp"
#include "deltainfer/io.hpp"
#include "deltainfer/manifest.hpp"
#include "deltainfer/parallel.hpp"
#include "deltainfer/report.hpp"
#include "deltainfer/tuner.hpp"

namespace fs = std::filesystem;
using namespace deltainfer;
using nlohmann::json;

namespace {

struct Flags {
  std::string model;
  std::vector<std::string> frames;
  std::string out;
  bool dense = false;
  std::size_t threads = 0;
  std::optional<std::size_t> reset_interval;
  bool poison = false;
  bool raw_pixels = false;
  std::vector<float> mean;
  std::vector<float> scale;
  bool no_fold = false;
  bool no_timing = false;

  double budget = 0.03;
  float start_epsilon = 1e-4f;
  float step_factor = 2.0f;
  float max_epsilon = 8.0f;
  double gain_cap = 0.01;
  std::string out_manifest;

  std::size_t repetitions = 1;
  std::size_t warmup = 1;
  bool no_oracle = false;
  std::size_t drift_window = 50;
};

void add_model_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--model", f.model, "Model manifest (JSON)")->required()->check(CLI::ExistingFile);
  cmd.add_option("--threads", f.threads, "Worker threads (default: DELTA_INFER_THREADS or 1)");
  cmd.add_option("--reset-interval", f.reset_interval, "Frames between automatic buffer resets (0 = never)");
  cmd.add_flag("--dense", f.dense, "Run with negative epsilons: no truncation, every tile dense");
  cmd.add_flag("--poison-debug", f.poison, "Fill inactive values with NaN and check for stale reads");
  cmd.add_flag("--no-fold-bn", f.no_fold, "Keep batch-norm layers as separate affine layers");
}

void add_frame_flags(CLI::App& cmd, Flags& f, bool required, bool multiple) {
  auto* opt = cmd.add_option("--frames", f.frames,
                             multiple ? "Frame source: .dct container or PNM directory (repeatable)"
                                      : "Frame source: .dct container or PNM directory");
  if (!multiple) opt->expected(1);
  if (required) opt->required();
  cmd.add_flag("--raw-pixels", f.raw_pixels, "Scale PNM bytes to [0, 1] without mean/scale normalisation");
  cmd.add_option("--mean", f.mean, "Per-channel normalisation mean")->expected(1, 3);
  cmd.add_option("--scale", f.scale, "Per-channel normalisation scale")->expected(1, 3);
}

io::Normalization normalization(const Flags& f) {
  io::Normalization n = f.raw_pixels ? io::Normalization::identity() : io::Normalization::imagenet();
  if (!f.mean.empty()) n.mean = f.mean;
  if (!f.scale.empty()) n.scale = f.scale;
  return n;
}

ModelGraph load(const Flags& f) {
  LoadOptions lo;
  lo.fold_batchnorm = !f.no_fold;
  ModelGraph g = load_model(f.model, lo);
  RunOptions& o = g.options();
  o.threads = resolve_thread_count(f.threads);
  o.dense_mode = f.dense;
  if (f.reset_interval) o.reset_interval = *f.reset_interval;
  if (f.poison) o.poison = true;
  return g;
}

std::vector<FeatureTensor> frames_from(const Flags& f, std::size_t i = 0) {
  return io::ingest_frames(f.frames.at(i), normalization(f));
}

void emit(const json& j, const std::string& out_dir, const std::string& file) {
  if (out_dir.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / file;
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
  std::cerr << "wrote " << path.string() << '\n';
}

int cmd_run(const Flags& f) {
  ModelGraph g = load(f);
  const auto frames = frames_from(f);
  const auto stats = report::run_sequence(g, frames, fs::path(f.out));
  json rep = report::run_report(g, stats, !f.no_timing);
  emit(rep, f.out, "run_report.json");
  const json& s = rep["steady_state"];
  std::fprintf(stderr, "%zu frames; after the first frame: %.1f%% tiles processed, %.1f%% MACs\n",
               frames.size(), 100.0 * s["processed_tile_fraction"].get<double>(),
               100.0 * s["mac_fraction"].get<double>());
  return 0;
}

int cmd_compare(const Flags& f) {
  ModelGraph g = load(f);
  const auto frames = frames_from(f);
  const report::CompareReport r = report::compare_sequence(g, frames, f.drift_window);
  emit(report::compare_json(g, r), f.out, "compare_report.json");
  std::fprintf(stderr, "max relative deviation %.3g, drift slope %.3g/frame, monotone growth: %s\n",
               r.drift.max_deviation, r.drift.slope, r.drift.monotone_growth ? "yes" : "no");
  return 0;
}

int cmd_tune(const Flags& f) {
  ModelGraph g = load(f);
  TuneConfig cfg;
  cfg.total_budget = f.budget;
  cfg.start_epsilon = f.start_epsilon;
  cfg.step_factor = f.step_factor;
  cfg.max_epsilon = f.max_epsilon;
  cfg.accuracy_gain_cap = f.gain_cap;
  cfg.calibration = f.frames;
  std::vector<std::vector<FeatureTensor>> calib;
  for (std::size_t i = 0; i < f.frames.size(); ++i) calib.push_back(frames_from(f, i));
  const TuneResult result = tune(g, cfg, calib);
  g.set_truncation_epsilons(result.epsilons);

  fs::path manifest_out = f.out_manifest;
  if (manifest_out.empty()) {
    if (f.out.empty()) throw ParamError("tune needs --out or --out-manifest");
    fs::create_directories(f.out);
    manifest_out = fs::path(f.out) / "tuned_manifest.json";
  } else if (manifest_out.has_parent_path()) {
    fs::create_directories(manifest_out.parent_path());
  }
  write_tuned_manifest(f.model, manifest_out, g);
  std::cerr << "wrote " << manifest_out.string() << '\n';
  emit(report::tune_json(g, cfg, result), f.out, "tune_report.json");
  for (const auto& l : result.report.layers) {
    std::fprintf(stderr, "  %-24s epsilon %-10.4g density %.3f\n", l.name.c_str(), l.epsilon, l.density);
  }
  std::fprintf(stderr, "loss %.4g -> %.4g (budget %.4g)\n", result.report.baseline_loss,
               result.report.final_loss, cfg.total_budget);
  return 0;
}

int cmd_bench(const Flags& f) {
  ModelGraph g = load(f);
  const auto frames = frames_from(f);
  report::BenchOptions bo;
  bo.repetitions = f.repetitions;
  bo.warmup = f.warmup;
  bo.include_oracle = !f.no_oracle;
  const report::BenchResult r = report::bench(g, frames, bo);
  json j = report::bench_json(g, r);
  emit(f.no_timing ? report::strip_timing(j) : j, f.out, "bench_report.json");
  std::fprintf(stderr, "delta %.1f fps", r.delta.fps());
  if (r.delta_dense) std::fprintf(stderr, ", dense mode %.1f fps", r.delta_dense->fps());
  if (r.oracle) std::fprintf(stderr, ", oracle %.1f fps", r.oracle->fps());
  std::fprintf(stderr, "\n");
  return 0;
}

int cmd_stats(const Flags& f) {
  ModelGraph g = load(f);
  json j = report::model_json(g);
  if (!f.frames.empty()) {
    const auto frames = frames_from(f);
    const auto stats = report::run_sequence(g, frames);
    json run = report::run_report(g, stats, !f.no_timing);
    j["run"] = {{"aggregate", run["aggregate"]}, {"steady_state", run["steady_state"]}, {"layers", run["layers"]}};
  }
  emit(j, f.out, "stats_report.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse delta inference for fixed-camera video"};
  app.name("delta-infer");
  app.require_subcommand(1);
  Flags f;

  auto* run = app.add_subcommand("run", "Run delta inference and write outputs plus a stats report");
  add_model_flags(*run, f);
  add_frame_flags(*run, f, true, false);
  run->add_option("--out", f.out, "Output directory")->required();
  run->add_flag("--no-timing", f.no_timing, "Omit wall-clock fields from the report");

  auto* compare = app.add_subcommand("compare", "Compare delta inference against the dense oracle");
  add_model_flags(*compare, f);
  add_frame_flags(*compare, f, true, false);
  compare->add_option("--out", f.out, "Report directory (default: stdout)");
  compare->add_option("--drift-window", f.drift_window, "Frames per drift-curve window")->check(CLI::PositiveNumber);

  auto* tune_cmd = app.add_subcommand("tune", "Tune per-layer truncation thresholds");
  add_model_flags(*tune_cmd, f);
  add_frame_flags(*tune_cmd, f, true, true);
  tune_cmd->add_option("--budget", f.budget, "Total allowed loss increase")->check(CLI::NonNegativeNumber);
  tune_cmd->add_option("--start-epsilon", f.start_epsilon, "First epsilon tried per layer");
  tune_cmd->add_option("--step-factor", f.step_factor, "Geometric growth factor");
  tune_cmd->add_option("--max-epsilon", f.max_epsilon, "Epsilon cap");
  tune_cmd->add_option("--gain-cap", f.gain_cap, "Largest tolerated loss decrease per layer");
  tune_cmd->add_option("--out", f.out, "Directory for tuned_manifest.json and tune_report.json");
  tune_cmd->add_option("--out-manifest", f.out_manifest, "Explicit path for the tuned manifest");

  auto* bench_cmd = app.add_subcommand("bench", "Time the dense oracle, dense mode and delta engine");
  add_model_flags(*bench_cmd, f);
  add_frame_flags(*bench_cmd, f, true, false);
  bench_cmd->add_option("--repetitions", f.repetitions, "Passes over the sequence")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", f.warmup, "Untimed leading frames per pass");
  bench_cmd->add_flag("--no-oracle", f.no_oracle, "Skip timing the dense oracle");
  bench_cmd->add_flag("--no-timing", f.no_timing, "Omit timing fields (for reproducible reports)");
  bench_cmd->add_option("--out", f.out, "Report directory (default: stdout)");

  auto* stats = app.add_subcommand("stats", "Summarise a model, optionally with run statistics");
  add_model_flags(*stats, f);
  add_frame_flags(*stats, f, false, false);
  stats->add_option("--out", f.out, "Report directory (default: stdout)");
  stats->add_flag("--no-timing", f.no_timing, "Omit wall-clock fields");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(f);
    if (*compare) return cmd_compare(f);
    if (*tune_cmd) return cmd_tune(f);
    if (*bench_cmd) return cmd_bench(f);
    if (*stats) return cmd_stats(f);
  } catch (const std::exception& e) {
    std::cerr << "delta-infer: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
