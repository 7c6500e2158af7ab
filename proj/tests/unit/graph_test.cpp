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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "deltainfer/error.hpp"
#include "deltainfer/graph.hpp"
#include "deltainfer/oracle.hpp"
#include "deltainfer/synthetic.hpp"
#include "support.hpp"

namespace deltainfer {
namespace {

using testing::Rng;

ModelGraph small_stack(float eps = 0.0f) {
  synthetic::ConvStackOptions o;
  o.height = 24;
  o.width = 20;
  o.channels = 8;
  o.conv_layers = 4;
  o.epsilon = eps;
  return synthetic::conv_stack(o);
}

std::vector<FeatureTensor> small_video(std::size_t frames) {
  synthetic::MovingObjectOptions o;
  o.height = 24;
  o.width = 20;
  o.frames = frames;
  o.object_size = 5;
  return synthetic::moving_object_video(o);
}

TEST(GraphBuilderTest, ShapesAndTopology) {
  GraphBuilder b("toy", Shape{1, 16, 16, 3});
  const std::size_t c1 = b.conv("c1", synthetic::random_conv(3, 8, {3, 3, 2, 1, 1}, 1, 1));
  EXPECT_EQ(b.shape(c1), (Shape{1, 8, 8, 8}));
  const std::size_t a1 = b.activation("a1", ActivationKind::kRelu, 0.0f);
  const std::size_t c2 = b.conv("c2", synthetic::random_conv(8, 8, {1, 1, 1, 1, 0}, 1, 2), {}, a1);
  const std::size_t s = b.add("sum", a1, c2);
  const std::size_t up = b.upsample("up", 2, UpsampleMode::kBilinear, s);
  EXPECT_EQ(b.shape(up), (Shape{1, 16, 16, 8}));
  const std::size_t cat = b.concat("cat", {up, 0});
  EXPECT_EQ(b.shape(cat), (Shape{1, 16, 16, 11}));
  const std::size_t p = b.pool("gp", PoolParams{PoolKind::kGlobalAvg, 0, 0, 0});
  EXPECT_EQ(b.shape(p), (Shape{1, 1, 1, 11}));
  ModelGraph g = b.finish();
  EXPECT_EQ(g.layers().front().kind, LayerKind::kInput);
  EXPECT_EQ(g.layers().back().kind, LayerKind::kOutput);
  for (std::size_t i = 0; i < g.layers().size(); ++i)
    for (std::size_t in : g.layer(i).inputs) EXPECT_LT(in, i);
  EXPECT_EQ(g.truncation_layers(), (std::vector<std::size_t>{a1}));
  EXPECT_EQ(*g.find("sum"), s);
  EXPECT_FALSE(g.find("missing").has_value());
}

TEST(GraphBuilderTest, Errors) {
  GraphBuilder b("toy", Shape{1, 8, 8, 3});
  EXPECT_THROW(b.conv("bad", synthetic::random_conv(4, 8, {3, 3, 1, 1, 1}, 1, 1)), ShapeError);
  const std::size_t c = b.conv("c", synthetic::random_conv(3, 4, {3, 3, 1, 1, 1}, 1, 1));
  EXPECT_THROW(b.add("sum", 0, c), ShapeError);
  EXPECT_THROW(b.conv("c", synthetic::random_conv(4, 4, {1, 1, 1, 1, 0}, 1, 1)), Error);
  EXPECT_THROW(b.activation("a", ActivationKind::kRelu, std::nanf("")), Error);
  EXPECT_THROW(b.activation("a2", ActivationKind::kRelu, 0.0f, 0.01f, 99), Error);
}

TEST(ModelGraphTest, FirstFrameMatchesOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    ModelGraph g = testing::random_graph(rng);
    const FeatureTensor f = testing::random_tensor(g.input_shape(), rng);
    const FrameResult r = g.run_frame(f);
    EXPECT_TRUE(r.stats.dense_frame);
    EXPECT_LT(testing::max_relative(r.output, oracle::dense_run_frame(g, f)), 1e-5) << "trial " << trial;
  }
}

TEST(ModelGraphTest, StaticInputIsFixpoint) {
  ModelGraph g = small_stack(0.01f);
  const FeatureTensor f = small_video(1).front();
  const FeatureTensor y0 = g.run_frame(f).output;
  for (int k = 1; k < 5; ++k) {
    const FrameResult r = g.run_frame(f);
    EXPECT_FALSE(r.stats.dense_frame);
    EXPECT_TRUE(testing::bit_equal(r.output, y0));
    EXPECT_EQ(r.stats.mac_performed(), 0u);
    for (std::size_t i = 0; i < g.layers().size(); ++i) {
      EXPECT_FALSE(g.layer_output(i).mask.any()) << g.layer(i).name;
      const LayerStats& ls = r.stats.layers[i];
      EXPECT_EQ(ls.tiles_skipped, ls.tiles_total);
    }
  }
}

TEST(ModelGraphTest, MovingSquareZeroThresholdTracksOracle) {
  synthetic::ConvStackOptions so;
  so.height = 32;
  so.width = 32;
  so.conv_layers = 6;
  ModelGraph g = synthetic::conv_stack(so);
  synthetic::MovingObjectOptions vo;
  vo.height = 32;
  vo.width = 32;
  vo.frames = 100;
  const auto video = synthetic::moving_object_video(vo);
  double worst = 0.0;
  for (const FeatureTensor& f : video) {
    worst = std::max(worst, testing::max_relative(g.run_frame(f).output, oracle::dense_run_frame(g, f)));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(ModelGraphTest, ResetReplaysFrameZero) {
  ModelGraph g = small_stack(0.05f);
  const auto video = small_video(6);
  const FeatureTensor y0 = g.run_frame(video[0]).output;
  for (std::size_t i = 1; i < video.size(); ++i) g.run_frame(video[i]);
  EXPECT_EQ(g.frame_index(), 6u);
  g.reset_buffers();
  g.reset_buffers();
  EXPECT_EQ(g.frame_index(), 0u);
  EXPECT_EQ(g.frames_since_reset(), 0u);
  const FrameResult r = g.run_frame(video[0]);
  EXPECT_TRUE(r.stats.dense_frame);
  EXPECT_TRUE(testing::bit_equal(r.output, y0));
}

TEST(ModelGraphTest, ResetEquivalence) {
  ModelGraph a = small_stack(0.05f);
  ModelGraph b = small_stack(0.05f);
  const auto video = small_video(12);
  for (std::size_t i = 0; i < 5; ++i) a.run_frame(video[i]);
  a.reset_buffers();
  for (std::size_t i = 5; i < video.size(); ++i) {
    EXPECT_TRUE(testing::bit_equal(a.run_frame(video[i]).output, b.run_frame(video[i]).output));
  }
}

TEST(ModelGraphTest, AutomaticResetInterval) {
  ModelGraph g = small_stack(0.05f);
  g.options().reset_interval = 3;
  const auto video = small_video(8);
  std::vector<bool> dense;
  for (const FeatureTensor& f : video) dense.push_back(g.run_frame(f).stats.dense_frame);
  EXPECT_EQ(dense, (std::vector<bool>{true, false, false, true, false, false, true, false}));
  EXPECT_EQ(g.frame_index(), 8u);
}

TEST(ModelGraphTest, CopiesOwnTheirState) {
  ModelGraph a = small_stack();
  const auto video = small_video(3);
  a.run_frame(video[0]);
  ModelGraph b = a;
  const FeatureTensor ya = a.run_frame(video[1]).output;
  const FeatureTensor yb = b.run_frame(video[1]).output;
  EXPECT_TRUE(testing::bit_equal(ya, yb));
  EXPECT_EQ(a.frame_index(), 2u);
  b.reset_buffers();
  EXPECT_EQ(a.frame_index(), 2u);
}

TEST(ModelGraphTest, EpsilonAccessors) {
  ModelGraph g = small_stack();
  const auto t = g.truncation_layers();
  ASSERT_EQ(t.size(), 4u);
  g.set_truncation_epsilons({0.1f, 0.2f, 0.3f, 0.4f});
  EXPECT_EQ(g.epsilon(t[2]), 0.3f);
  g.set_epsilon(t[0], -1.0f);
  EXPECT_EQ(g.truncation_epsilons().front(), -1.0f);
  EXPECT_THROW(g.set_truncation_epsilons({0.1f}), Error);
  EXPECT_THROW(g.set_epsilon(t[1], std::numeric_limits<float>::infinity()), Error);
}

TEST(ModelGraphTest, DenseModeMatchesOracleAndCountsAllMacs) {
  ModelGraph g = small_stack(0.5f);
  g.options().dense_mode = true;
  for (const FeatureTensor& f : small_video(4)) {
    const FrameResult r = g.run_frame(f);
    EXPECT_EQ(r.stats.mac_performed(), r.stats.mac_dense_equivalent());
    EXPECT_EQ(r.stats.mac_performed(), g.dense_macs_per_frame());
    EXPECT_LT(testing::max_relative(r.output, oracle::dense_run_frame(g, f)), 1e-5);
  }
}

TEST(ModelGraphTest, RejectsBadFrames) {
  ModelGraph g = small_stack();
  EXPECT_THROW(g.run_frame(FeatureTensor(Shape{1, 24, 21, 3})), ShapeError);
  FeatureTensor f(g.input_shape());
  f.at(0, 3, 3, 1) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(g.run_frame(f), ValueError);
  EXPECT_THROW(oracle::dense_run_frame(g, f), ValueError);
}

}  // namespace
}  // namespace deltainfer
