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

#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "deltainfer/error.hpp"
#include "deltainfer/io.hpp"
#include "support.hpp"

namespace deltainfer {
namespace {

namespace fs = std::filesystem;
using testing::Rng;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("deltainfer_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream os(p, std::ios::binary);
    os << bytes;
  }

  fs::path dir_;
};

TEST_F(IoTest, TensorRoundTripIsBitExact) {
  Rng rng(1);
  FeatureTensor t = testing::random_tensor(Shape{2, 3, 5, 7}, rng, -1e6f, 1e6f);
  t.data()[0] = -0.0f;
  t.data()[1] = 1e-42f;
  io::write_tensor(dir_ / "t.dct", t);
  const FeatureTensor u = io::read_tensor(dir_ / "t.dct");
  EXPECT_TRUE(testing::bit_equal(t, u));
  EXPECT_EQ(fs::file_size(dir_ / "t.dct"), 4u + 4u + 16u + t.size() * 4u);
}

TEST_F(IoTest, MaskRoundTrip) {
  Rng rng(2);
  const UpdateMask m = testing::random_mask(2, 9, 4, 0.3, rng);
  io::write_mask(dir_ / "m.dcm", m);
  EXPECT_EQ(io::read_mask(dir_ / "m.dcm"), m);
}

TEST_F(IoTest, FramesSplitByBatch) {
  Rng rng(3);
  std::vector<FeatureTensor> frames;
  for (int i = 0; i < 4; ++i) frames.push_back(testing::random_tensor(Shape{1, 3, 3, 2}, rng));
  io::write_frames(dir_ / "v.dct", frames);
  const auto back = io::ingest_frames(dir_ / "v.dct");
  ASSERT_EQ(back.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(testing::bit_equal(back[i], frames[i]));
}

TEST_F(IoTest, WhiteP6IsOneBeforeNormalisation) {
  io::Image img{4, 4, 3, std::vector<std::uint8_t>(48, 255)};
  io::write_pnm(dir_ / "white.ppm", img);
  const auto frames = io::ingest_frames(dir_, io::Normalization::identity());
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].shape(), (Shape{1, 4, 4, 3}));
  for (float v : frames[0].data()) EXPECT_EQ(v, 1.0f);
  const FeatureTensor n = io::image_to_tensor(img);
  EXPECT_FLOAT_EQ(n.at(0, 0, 0, 0), (1.0f - 0.485f) / 0.229f);
  EXPECT_FLOAT_EQ(n.at(0, 3, 3, 2), (1.0f - 0.406f) / 0.225f);
}

TEST_F(IoTest, PnmHeaderWithComments) {
  write_bytes(dir_ / "g.pgm", std::string("P5\n# comment\n2 1\n# another\n255\n") + std::string("\x00\xff", 2));
  const io::Image img = io::read_pnm(dir_ / "g.pgm");
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.height, 1u);
  EXPECT_EQ(img.channels, 1u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 255}));
}

TEST_F(IoTest, DirectoryIsSortedByName) {
  for (int i : {2, 0, 1}) {
    io::Image img{2, 2, 1, std::vector<std::uint8_t>(4, static_cast<std::uint8_t>(i * 100))};
    io::write_pnm(dir_ / ("f" + std::to_string(i) + ".pgm"), img);
  }
  write_bytes(dir_ / "notes.txt", "ignored");
  const auto frames = io::ingest_frames(dir_, io::Normalization::identity());
  ASSERT_EQ(frames.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_FLOAT_EQ(frames[i].data()[0], i * 100 / 255.0f);
}

TEST_F(IoTest, MixedSizesFail) {
  io::write_pnm(dir_ / "a.pgm", io::Image{2, 2, 1, std::vector<std::uint8_t>(4, 0)});
  io::write_pnm(dir_ / "b.pgm", io::Image{3, 2, 1, std::vector<std::uint8_t>(6, 0)});
  EXPECT_THROW(io::ingest_frames(dir_), ShapeError);
}

TEST_F(IoTest, MalformedFiles) {
  write_bytes(dir_ / "bad.dct", "DCNX");
  EXPECT_THROW(io::read_tensor(dir_ / "bad.dct"), ParseError);
  Rng rng(4);
  io::write_tensor(dir_ / "t.dct", testing::random_tensor(Shape{1, 2, 2, 1}, rng));
  {
    std::ofstream os(dir_ / "t.dct", std::ios::binary | std::ios::app);
    os << "x";
  }
  EXPECT_THROW(io::read_tensor(dir_ / "t.dct"), ParseError);
  io::write_tensor(dir_ / "short.dct", testing::random_tensor(Shape{1, 2, 2, 1}, rng));
  fs::resize_file(dir_ / "short.dct", fs::file_size(dir_ / "short.dct") - 2);
  EXPECT_THROW(io::read_tensor(dir_ / "short.dct"), ParseError);

  write_bytes(dir_ / "p.ppm", "P6\n2 2\n255\n\x01\x02");
  EXPECT_THROW(io::read_pnm(dir_ / "p.ppm"), ParseError);
  write_bytes(dir_ / "q.ppm", "P3\n1 1\n255\n1 2 3\n");
  EXPECT_THROW(io::read_pnm(dir_ / "q.ppm"), ParseError);
  write_bytes(dir_ / "r.pgm", "P5\n1 1\n65535\n\x00\x01");
  EXPECT_THROW(io::read_pnm(dir_ / "r.pgm"), ParseError);
  EXPECT_THROW(io::read_tensor(dir_ / "absent.dct"), IoError);
}

TEST_F(IoTest, EmptySourceFails) {
  EXPECT_THROW(io::ingest_frames(dir_), ValueError);
  EXPECT_THROW(io::ingest_frames(dir_ / "absent"), IoError);
}

TEST(NormalizationTest, ChannelRules) {
  const io::Image gray{1, 1, 1, {255}};
  EXPECT_EQ(io::image_to_tensor(gray, io::Normalization::identity()).shape().channels, 1u);
  // Grayscale under a three-channel normalisation uses the channel means.
  const FeatureTensor g = io::image_to_tensor(gray);
  EXPECT_NEAR(g.data()[0], (1.0f - (0.485f + 0.456f + 0.406f) / 3) / ((0.229f + 0.224f + 0.225f) / 3), 1e-5);
  io::Normalization bad{{0.1f, 0.2f}, {1.0f, 1.0f}};
  EXPECT_THROW(io::image_to_tensor(io::Image{1, 1, 3, {1, 2, 3}}, bad), Error);
}

}  // namespace
}  // namespace deltainfer
