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

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "deltainfer/io.hpp"
#include "deltainfer/report.hpp"
#include "deltainfer/synthetic.hpp"
#include "support.hpp"

namespace deltainfer {
namespace {

namespace fs = std::filesystem;
using testing::Rng;

ModelGraph stack(std::size_t size, std::size_t layers, float eps) {
  synthetic::ConvStackOptions o;
  o.height = o.width = size;
  o.conv_layers = layers;
  o.channels = 8;
  o.epsilon = eps;
  return synthetic::conv_stack(o);
}

FeatureTensor first_frame(std::size_t size) {
  synthetic::MovingObjectOptions o;
  o.height = o.width = size;
  o.frames = 1;
  return synthetic::moving_object_video(o).front();
}

// Each frame redraws `count` distinct random input pixels.
std::vector<FeatureTensor> scattered_video(const FeatureTensor& start, std::size_t frames, std::size_t count,
                                           Rng& rng) {
  std::vector<FeatureTensor> v{start};
  std::vector<std::size_t> idx(start.shape().pixels());
  std::iota(idx.begin(), idx.end(), 0);
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  for (std::size_t f = 1; f < frames; ++f) {
    FeatureTensor next = v.back();
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < count; ++k)
      for (std::size_t c = 0; c < next.channels(); ++c) next.pixel(idx[k])[c] = val(rng);
    v.push_back(std::move(next));
  }
  return v;
}

TEST(RunReportTest, StaticVideoSkipsEverythingFromSecondFrame) {
  ModelGraph g = stack(32, 4, 0.0f);
  const auto frames = synthetic::static_video(first_frame(32), 10);
  const auto stats = report::run_sequence(g, frames);
  const auto j = report::run_report(g, stats);
  ASSERT_EQ(j["per_frame"].size(), 10u);
  EXPECT_GT(j["per_frame"][0]["tiles_processed"].get<std::size_t>(), 0u);
  for (std::size_t i = 1; i < 10; ++i) {
    EXPECT_EQ(j["per_frame"][i]["tiles_processed"].get<std::size_t>(), 0u);
    EXPECT_EQ(j["per_frame"][i]["mac_performed"].get<std::uint64_t>(), 0u);
  }
  EXPECT_EQ(j["steady_state"]["tiles_processed"].get<std::size_t>(), 0u);
  EXPECT_EQ(j["steady_state"]["frames"].get<std::size_t>(), 9u);
  EXPECT_EQ(j["steady_state"]["processed_tile_fraction"].get<double>(), 0.0);
}

TEST(RunReportTest, DenseModeMacEquality) {
  ModelGraph g = stack(24, 3, 0.1f);
  g.options().dense_mode = true;
  Rng rng(1);
  const auto frames = scattered_video(first_frame(24), 5, 20, rng);
  const auto j = report::run_report(g, report::run_sequence(g, frames));
  EXPECT_TRUE(j["dense_mode"].get<bool>());
  for (const auto& f : j["per_frame"]) {
    EXPECT_EQ(f["mac_performed"], f["mac_dense_equivalent"]);
    EXPECT_EQ(f["mac_performed"], f["mac_performed_total"]);
  }
  EXPECT_EQ(j["aggregate"]["mac_fraction"].get<double>(), 1.0);
}

TEST(RunReportTest, SixPercentActiveMatchesRecount) {
  ModelGraph g = stack(64, 5, 0.0f);
  Rng rng(2);
  const std::size_t changed = 64 * 64 * 6 / 100;
  const auto frames = scattered_video(first_frame(64), 8, changed, rng);
  std::size_t tiles = 0, processed = 0;
  std::uint64_t macs = 0, dense_macs = 0;
  std::vector<RunStats> stats;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    stats.push_back(g.run_frame(frames[i]).stats);
    if (i == 0) continue;
    EXPECT_EQ(g.layer_output(0).mask.count(), changed);
    const testing::ConvRecount rc = testing::recount_graph(g);
    EXPECT_EQ(rc.tiles_total, stats.back().tiles_total());
    EXPECT_EQ(rc.very_sparse + rc.dense, stats.back().tiles_processed());
    EXPECT_EQ(rc.macs, stats.back().mac_performed());
    EXPECT_EQ(rc.dense_macs, stats.back().mac_dense_equivalent());
    tiles += rc.tiles_total;
    processed += rc.very_sparse + rc.dense;
    macs += rc.macs;
    dense_macs += rc.dense_macs;
  }
  const auto j = report::run_report(g, stats);
  const auto& s = j["steady_state"];
  EXPECT_EQ(s["tiles_total"].get<std::size_t>(), tiles);
  EXPECT_EQ(s["tiles_processed"].get<std::size_t>(), processed);
  EXPECT_EQ(s["mac_performed"].get<std::uint64_t>(), macs);
  EXPECT_EQ(s["processed_tile_fraction"].get<double>(), static_cast<double>(processed) / tiles);
  EXPECT_EQ(s["mac_fraction"].get<double>(), static_cast<double>(macs) / dense_macs);
}

TEST(RunReportTest, DeterministicWithoutTiming) {
  Rng rng(3);
  const auto frames = scattered_video(first_frame(32), 6, 40, rng);
  auto once = [&] {
    ModelGraph g = stack(32, 3, 0.05f);
    return report::strip_timing(report::run_report(g, report::run_sequence(g, frames)));
  };
  const auto a = once();
  EXPECT_EQ(a, once());
  EXPECT_FALSE(a["aggregate"].contains("wall_seconds"));
  EXPECT_EQ(a.dump().find("wall_seconds"), std::string::npos);
}

TEST(RunReportTest, LayerTableAndConservation) {
  ModelGraph g = stack(32, 3, 0.0f);
  Rng rng(4);
  const auto stats = report::run_sequence(g, scattered_video(first_frame(32), 4, 30, rng));
  for (const RunStats& s : stats) {
    std::uint64_t tile_sum = 0;
    for (const LayerStats& l : s.layers) {
      tile_sum += std::accumulate(l.tile_macs.begin(), l.tile_macs.end(), std::uint64_t{0});
      EXPECT_EQ(l.tiles_skipped + l.tiles_very_sparse + l.tiles_dense, l.tiles_total) << l.name;
      EXPECT_LE(l.mac_performed, l.mac_dense_equivalent);
    }
    EXPECT_EQ(tile_sum, s.mac_performed_total);
    EXPECT_EQ(s.mac_performed(), s.mac_performed_total);
  }
  const auto j = report::run_report(g, stats);
  EXPECT_EQ(j["layers"].size(), g.layers().size());
}

TEST(RunReportTest, WritesFrameOutputs) {
  const fs::path dir = fs::temp_directory_path() / "deltainfer_report_frames";
  fs::remove_all(dir);
  ModelGraph g = stack(16, 2, 0.0f);
  const auto frames = synthetic::static_video(first_frame(16), 3);
  report::run_sequence(g, frames, dir);
  for (int i = 0; i < 3; ++i) {
    const fs::path p = dir / ("frame_0000" + std::to_string(i) + ".dct");
    ASSERT_TRUE(fs::exists(p));
    EXPECT_EQ(io::read_tensor(p).shape(), g.output_shape());
  }
  fs::remove_all(dir);
}

TEST(DriftTest, HandSeries) {
  const report::DriftSummary up = report::analyze_drift({1, 2, 3, 4, 5, 6}, 2);
  EXPECT_NEAR(up.slope, 1.0, 1e-12);
  EXPECT_EQ(up.window_max, (std::vector<double>{2, 4, 6}));
  EXPECT_TRUE(up.monotone_growth);
  EXPECT_EQ(up.max_deviation, 6.0);

  const report::DriftSummary flat = report::analyze_drift({1, 3, 1, 3, 1, 3, 1}, 2);
  EXPECT_NEAR(flat.slope, 0.0, 0.1);
  EXPECT_EQ(flat.window_max, (std::vector<double>{3, 3, 3, 1}));
  EXPECT_FALSE(flat.monotone_growth);

  EXPECT_FALSE(report::analyze_drift({1, 2, 3, 4}, 2).monotone_growth);
  EXPECT_EQ(report::analyze_drift({}, 4).slope, 0.0);
}

TEST(DeviationTest, Definition) {
  const FeatureTensor d(Shape{1, 1, 2, 1}, {1.0f, 2.5f});
  const FeatureTensor o(Shape{1, 1, 2, 1}, {1.0f, 2.0f});
  const report::FrameDeviation dev = report::deviation(d, o);
  EXPECT_NEAR(dev.max_relative, 0.25, 1e-9);
  EXPECT_NEAR(dev.mean_relative, 0.125, 1e-9);
}

TEST(CompareTest, ZeroThresholdStaysClose) {
  ModelGraph g = stack(32, 4, 0.0f);
  Rng rng(5);
  const auto rep = report::compare_sequence(g, scattered_video(first_frame(32), 20, 50, rng), 5);
  for (const auto& f : rep.frames) EXPECT_LT(f.max_relative, 1e-4);
  const auto j = report::compare_json(g, rep);
  EXPECT_EQ(j["per_frame"].size(), 20u);
  EXPECT_EQ(j["drift"]["window_max"].size(), 4u);
}

TEST(CompareTest, StaticVideoDeviationIsFrozen) {
  ModelGraph g = stack(32, 4, 0.1f);
  const auto rep = report::compare_sequence(g, synthetic::static_video(first_frame(32), 12), 4);
  for (std::size_t i = 1; i < rep.frames.size(); ++i) {
    EXPECT_EQ(rep.frames[i].max_relative, rep.frames[0].max_relative);
  }
  EXPECT_EQ(rep.drift.slope, 0.0);
  EXPECT_FALSE(rep.drift.monotone_growth);
}

TEST(CompareTest, DyadicStaticVideoIsExact) {
  GraphBuilder b("dyadic", Shape{1, 8, 8, 1});
  ConvParams p;
  p.geometry = ConvGeometry{3, 3, 1, 1, 1};
  p.in_channels = p.out_channels = 1;
  p.weights = {0.5f, -1.0f, 0.25f, 1.0f, 2.0f, -0.5f, 0.0f, 1.0f, 0.75f};
  p.bias = {0.125f};
  b.conv("c", p);
  b.activation("a", ActivationKind::kRelu, 0.0f);
  ModelGraph g = b.finish();
  FeatureTensor f(Shape{1, 8, 8, 1});
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = static_cast<float>(i % 7) * 0.25f;
  const auto rep = report::compare_sequence(g, synthetic::static_video(f, 6), 2);
  for (const auto& d : rep.frames) EXPECT_EQ(d.max_relative, 0.0);
}

TEST(BenchTest, StaticVideoBeatsOracle) {
  const ModelGraph g = stack(32, 4, 0.0f);
  report::BenchOptions opt;
  opt.warmup = 1;
  const auto r = report::bench(g, synthetic::static_video(first_frame(32), 12), opt);
  ASSERT_TRUE(r.oracle.has_value());
  ASSERT_TRUE(r.delta_dense.has_value());
  EXPECT_EQ(r.delta.frames_timed, 11u);
  EXPECT_GT(r.delta.fps(), r.oracle->fps());
  const auto j = report::bench_json(g, r);
  EXPECT_EQ(j["report"], "bench");
  EXPECT_GT(j["speedup"]["delta_vs_oracle"].get<double>(), 1.0);
  const auto s = report::strip_timing(j);
  EXPECT_FALSE(s["delta"].contains("fps"));
}

TEST(BenchTest, OptionalPhases) {
  const ModelGraph g = stack(16, 2, 0.0f);
  report::BenchOptions opt;
  opt.include_oracle = false;
  opt.include_dense_mode = false;
  opt.repetitions = 3;
  opt.warmup = 2;
  const auto r = report::bench(g, synthetic::static_video(first_frame(16), 5), opt);
  EXPECT_FALSE(r.oracle.has_value());
  EXPECT_FALSE(r.delta_dense.has_value());
  EXPECT_EQ(r.delta.frames_timed, 9u);
}

TEST(ModelJsonTest, Summary) {
  const ModelGraph g = stack(16, 2, 0.25f);
  const auto j = report::model_json(g);
  EXPECT_EQ(j.dump().find("wall_seconds"), std::string::npos);
  EXPECT_FALSE(j.empty());
}

}  // namespace
}  // namespace deltainfer
