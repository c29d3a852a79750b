/* Copyright 2026 The bialign Authors. All Rights Reserved.

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
#include <set>

#include <gtest/gtest.h>

#include "bialign/data.hpp"
#include "bialign/rng.hpp"

namespace bialign {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("bialign_data_" + name);
  fs::remove_all(p);
  return p;
}

std::set<std::int32_t> values_of(const LabelMap& m) {
  return {m.values.begin(), m.values.end()};
}

TEST(SceneTest, DeterministicUnderSeed) {
  const SceneSpec spec;
  const auto a = generate_scene(spec, 3), b = generate_scene(spec, 3), c = generate_scene(spec, 4);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_TRUE(std::equal(a.image.data().begin(), a.image.data().end(), b.image.data().begin()));
  EXPECT_NE(a.labels, c.labels);
}

TEST(SceneTest, ShapesAndRanges) {
  SceneSpec spec;
  spec.height = 40;
  spec.width = 72;
  const auto s = generate_scene(spec, 1);
  EXPECT_EQ(s.image.shape(), (Shape{1, 3, 40, 72}));
  EXPECT_EQ(s.labels.h, 40);
  EXPECT_EQ(s.labels.w, 72);
  for (float v : s.image.data()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
  for (auto v : values_of(s.labels)) {
    EXPECT_GE(v, 0);
    EXPECT_LT(v, spec.num_classes);
  }
}

TEST(SceneTest, NoShapesMeansAllBackground) {
  SceneSpec spec;
  spec.min_shapes = spec.max_shapes = 0;
  const auto s = generate_scene(spec, 9);
  EXPECT_EQ(values_of(s.labels), (std::set<std::int32_t>{0}));
}

TEST(SceneTest, ImageFollowsClassColors) {
  // With no jitter the interior of a flat region carries the class color.
  SceneSpec spec;
  spec.min_shapes = spec.max_shapes = 0;
  spec.color_jitter = 0.0;
  const auto s = generate_scene(spec, 2);
  const auto c = class_color(0);
  for (int ch = 0; ch < 3; ++ch) EXPECT_FLOAT_EQ(s.image.at(0, ch, 10, 10), c[ch]);
}

TEST(SceneTest, ClassesUsuallyPresent) {
  // Over many scenes every foreground class appears somewhere.
  const SceneSpec spec;
  std::set<std::int32_t> seen;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto v = values_of(generate_scene(spec, seed).labels);
    seen.insert(v.begin(), v.end());
  }
  EXPECT_EQ(seen, (std::set<std::int32_t>{0, 1, 2, 3, 4}));
}

TEST(SceneTest, ValidateRejectsBadSpecs) {
  SceneSpec s;
  s.num_classes = 1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SceneSpec{};
  s.min_shapes = 4;
  s.max_shapes = 3;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ClassColorTest, DistinctForManyClasses) {
  std::set<std::array<float, 3>> colors;
  for (int c = 0; c < 32; ++c) colors.insert(class_color(c));
  EXPECT_EQ(colors.size(), 32u);
}

TEST(AugmentTest, UnitScaleNoFlipIsIdentity) {
  const auto s = generate_scene(SceneSpec{}, 5);
  const auto out = apply_augment(s, AugmentParams{false, 1.0, 0, 0}, 64, 64);
  EXPECT_EQ(out.labels, s.labels);
  EXPECT_TRUE(std::equal(s.image.data().begin(), s.image.data().end(), out.image.data().begin()));
}

TEST(AugmentTest, FlipMirrorsImageAndLabels) {
  const auto s = generate_scene(SceneSpec{}, 6);
  const auto out = apply_augment(s, AugmentParams{true, 1.0, 0, 0}, 64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      ASSERT_EQ(out.labels.at(0, y, x), s.labels.at(0, y, 63 - x));
      ASSERT_EQ(out.image.at(0, 1, y, x), s.image.at(0, 1, y, 63 - x));
    }
  const auto twice = apply_augment(out, AugmentParams{true, 1.0, 0, 0}, 64, 64);
  EXPECT_EQ(twice.labels, s.labels);
}

TEST(AugmentTest, DownscalePadsWithIgnore) {
  const auto s = generate_scene(SceneSpec{}, 7);
  const auto out = apply_augment(s, AugmentParams{false, 0.5, 0, 0}, 64, 64);
  EXPECT_EQ(out.image.shape(), (Shape{1, 3, 64, 64}));
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const bool pad = y >= 32 || x >= 32;
      if (pad) {
        ASSERT_EQ(out.labels.at(0, y, x), kIgnoreIndex);
        ASSERT_EQ(out.image.at(0, 0, y, x), 0.0f);
      } else {
        ASSERT_NE(out.labels.at(0, y, x), kIgnoreIndex);
      }
    }
}

TEST(AugmentTest, UpscaleCropKeepsOnlySourceLabels) {
  const auto s = generate_scene(SceneSpec{}, 8);
  const auto src = values_of(s.labels);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = augment(s, seed, AugmentConfig{});
    EXPECT_EQ(out.labels.h, 64);
    EXPECT_EQ(out.labels.w, 64);
    for (auto v : values_of(out.labels)) {
      EXPECT_TRUE(v == kIgnoreIndex || src.count(v)) << v;
    }
  }
}

TEST(AugmentTest, DrawIsDeterministicAndInRange) {
  const AugmentConfig cfg;
  Rng r(1);
  for (int i = 0; i < 200; ++i) {
    const auto seed = r.next_u64();
    const auto p = draw_augment(cfg, 64, 64, seed);
    const auto q = draw_augment(cfg, 64, 64, seed);
    EXPECT_EQ(p.scale, q.scale);
    EXPECT_EQ(p.offset_x, q.offset_x);
    ASSERT_GE(p.scale, 0.5);
    ASSERT_LE(p.scale, 2.0);
    const auto sh = std::max<std::int64_t>(scaled_extent(64, p.scale), 64);
    ASSERT_GE(p.offset_y, 0);
    ASSERT_LE(p.offset_y + 64, sh);
  }
  AugmentConfig bad;
  bad.scale_min = 3.0;
  EXPECT_THROW(draw_augment(bad, 64, 64, 0), std::invalid_argument);
}

TEST(AugmentTest, CropOutsideCanvasThrows) {
  const auto s = generate_scene(SceneSpec{}, 8);
  EXPECT_THROW(apply_augment(s, AugmentParams{false, 1.0, 1, 0}, 64, 64), std::invalid_argument);
}

TEST(ResizeLabelsTest, NearestWithAlignedCorners) {
  const LabelMap m{1, 1, 3, {1, 2, 3}};
  EXPECT_EQ(resize_labels_nearest(m, 1, 5).values, (std::vector<std::int32_t>{1, 2, 2, 3, 3}));
  EXPECT_EQ(resize_labels_nearest(m, 1, 3), m);
  EXPECT_EQ(resize_labels_nearest(m, 1, 2).values, (std::vector<std::int32_t>{1, 3}));
}

TEST(QuantizeTest, RoundsAndClamps) {
  EXPECT_EQ(quantize_unit(0.0f), 0);
  EXPECT_EQ(quantize_unit(1.0f), 255);
  EXPECT_EQ(quantize_unit(2.0f), 255);
  EXPECT_EQ(quantize_unit(-1.0f), 0);
  EXPECT_EQ(quantize_unit(0.5f), 128);
}

TEST(DatasetTest, WriteAndLoadSplitRoundTrip) {
  const auto root = fresh_dir("split");
  const SceneSpec spec;
  write_split(root, "train", spec, 3, 11);
  const auto samples = load_split(root, "train");
  ASSERT_EQ(samples.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    const auto want = generate_scene(spec, sample_seed(11, "train", i));
    EXPECT_EQ(samples[i].labels, want.labels);
    // Images round-trip up to 8-bit quantisation.
    for (std::int64_t k = 0; k < want.image.numel(); ++k) {
      ASSERT_NEAR(samples[i].image.data()[k], want.image.data()[k], 0.5 / 255.0 + 1e-6);
    }
  }
  EXPECT_TRUE(fs::exists(sample_paths(root, "train", 0).image));
  EXPECT_EQ(sample_paths(root, "train", 2).labels.filename(), "00002_lab.pgm");
  EXPECT_NE(sample_seed(11, "train", 0), sample_seed(11, "val", 0));
}

TEST(DatasetTest, LabelFileRoundTripIsExact) {
  const auto dir = fresh_dir("labels");
  fs::create_directories(dir);
  LabelMap m = LabelMap::filled(1, 5, 7, 0);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = static_cast<std::int32_t>((i * 37) % 256);
  Sample s{Tensor::zeros({1, 3, 5, 7}), m};
  save_sample(s, dir / "a.ppm", dir / "a.pgm");
  EXPECT_EQ(load_sample(dir / "a.ppm", dir / "a.pgm").labels, m);
}

TEST(DatasetTest, MissingSplitIsAnError) {
  EXPECT_THROW(load_split(fresh_dir("missing"), "train"), DatasetError);
}

TEST(DatasetTest, MismatchedImageAndLabelsIsAnError) {
  const auto dir = fresh_dir("mismatch");
  fs::create_directories(dir);
  save_sample(Sample{Tensor::zeros({1, 3, 4, 4}), LabelMap::filled(1, 4, 4, 0)}, dir / "a.ppm", dir / "a.pgm");
  save_sample(Sample{Tensor::zeros({1, 3, 4, 5}), LabelMap::filled(1, 4, 5, 0)}, dir / "b.ppm", dir / "b.pgm");
  EXPECT_ANY_THROW(load_sample(dir / "a.ppm", dir / "b.pgm"));
}

TEST(DatasetTest, StackSamples) {
  const SceneSpec spec;
  std::vector<Sample> v{generate_scene(spec, 1), generate_scene(spec, 2)};
  const auto b = stack_samples(v);
  EXPECT_EQ(b.image.shape(), (Shape{2, 3, 64, 64}));
  EXPECT_EQ(b.labels.n, 2);
  EXPECT_EQ(b.labels.at(1, 5, 5), v[1].labels.at(0, 5, 5));
  EXPECT_EQ(b.image.at(1, 2, 7, 9), v[1].image.at(0, 2, 7, 9));
}

}  // namespace
}  // namespace bialign
