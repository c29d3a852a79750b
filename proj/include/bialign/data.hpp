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
#ifndef BIALIGN_DATA_HPP_
#define BIALIGN_DATA_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bialign/labels.hpp"
#include "bialign/netpbm.hpp"
#include "bialign/tensor.hpp"

namespace bialign {

/// One image with its labels. image is (1,3,h,w) in [0,1]; labels is (1,h,w).
struct Sample {
  Tensor image;
  LabelMap labels;
};

/// Parameters of the synthetic "toy street scene" generator.
struct SceneSpec {
  int num_classes = 5;
  std::int64_t height = 64;
  std::int64_t width = 64;
  int min_shapes = 3;
  int max_shapes = 6;
  double color_jitter = 0.04;  // per-pixel stddev around the class color

  /// Throws std::invalid_argument.
  void validate() const;
};

/// RGB base color of a class, in [0,1].
std::array<float, 3> class_color(int cls);

/// Background (class 0) overlaid back-to-front with rectangles, ellipses and
/// thick polylines of classes 1..num_classes-1. The image is the class
/// color plus Gaussian jitter, smoothed by a 3x3 box filter and clamped.
Sample generate_scene(const SceneSpec& spec, std::uint64_t seed);

struct AugmentConfig {
  double scale_min = 0.5;
  double scale_max = 2.0;
  std::int64_t crop_h = 64;
  std::int64_t crop_w = 64;
  double hflip_prob = 0.5;

  void validate() const;
};

/// A concrete draw of the random augmentation. Offsets index the scaled,
/// possibly padded canvas.
struct AugmentParams {
  bool flip = false;
  double scale = 1.0;
  std::int64_t offset_y = 0;
  std::int64_t offset_x = 0;
};

/// Scaled extent round(len * scale), at least 1.
std::int64_t scaled_extent(std::int64_t len, double scale);

AugmentParams draw_augment(const AugmentConfig& cfg, std::int64_t h, std::int64_t w,
                           std::uint64_t seed);

/// Flip, resize (image bilinear with aligned corners, labels nearest), pad
/// at the bottom/right with zero image and ignore labels up to the crop
/// size, then crop crop_h x crop_w at the given offsets.
Sample apply_augment(const Sample& s, const AugmentParams& p, std::int64_t crop_h,
                     std::int64_t crop_w);

Sample augment(const Sample& s, std::uint64_t seed, const AugmentConfig& cfg);

/// Nearest-neighbour label resize using the aligned-corners coordinate map.
LabelMap resize_labels_nearest(const LabelMap& labels, std::int64_t out_h, std::int64_t out_w);

/// Quantization used by the dataset files: byte = round(255 * clamp(v)).
std::uint8_t quantize_unit(float v);

Raster image_to_raster(const Tensor& image);
Tensor raster_to_image(const Raster& r);
/// Label values must be in [0, 255].
Raster labels_to_raster(const LabelMap& labels);
LabelMap raster_to_labels(const Raster& r);

void save_sample(const Sample& s, const std::filesystem::path& image_path,
                 const std::filesystem::path& label_path);
Sample load_sample(const std::filesystem::path& image_path,
                   const std::filesystem::path& label_path);

/// `<root>/<split>/<index:05>_img.ppm` and `..._lab.pgm`.
struct SamplePaths {
  std::filesystem::path image;
  std::filesystem::path labels;
};
SamplePaths sample_paths(const std::filesystem::path& root, const std::string& split,
                         std::int64_t index);

/// Seed of sample `index` in `split`; the same for generation and reloading
/// checks.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& split, std::int64_t index);

/// Writes `count` generated samples into `<root>/<split>`.
void write_split(const std::filesystem::path& root, const std::string& split,
                 const SceneSpec& spec, std::int64_t count, std::uint64_t seed);

/// Thrown when a dataset split is missing or inconsistent.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loads indices 0, 1, ... of a split until the first missing index.
std::vector<Sample> load_split(const std::filesystem::path& root, const std::string& split);

/// Stacks equally sized samples into a batch.
Sample stack_samples(std::span<const Sample> samples);

}  // namespace bialign

#endif  // BIALIGN_DATA_HPP_
