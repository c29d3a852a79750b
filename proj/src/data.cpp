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
#include "bialign/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "bialign/nn.hpp"
#include "bialign/ops.hpp"
#include "bialign/rng.hpp"

namespace bialign {

namespace {

constexpr std::array<std::array<float, 3>, 8> kPalette{{
    {0.30f, 0.30f, 0.35f},
    {0.85f, 0.20f, 0.20f},
    {0.20f, 0.70f, 0.25f},
    {0.20f, 0.35f, 0.90f},
    {0.95f, 0.85f, 0.20f},
    {0.80f, 0.30f, 0.85f},
    {0.20f, 0.85f, 0.85f},
    {0.95f, 0.55f, 0.15f},
}};

struct Point {
  double y;
  double x;
};

double segment_distance_sq(Point p, Point a, Point b) {
  const double dy = b.y - a.y, dx = b.x - a.x;
  const double len_sq = dy * dy + dx * dx;
  double t = len_sq > 0.0 ? ((p.y - a.y) * dy + (p.x - a.x) * dx) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ey = a.y + t * dy - p.y, ex = a.x + t * dx - p.x;
  return ey * ey + ex * ex;
}

// Paints class `cls` wherever `inside(y, x)` holds (pixel centres).
template <typename F>
void paint(LabelMap& labels, std::int32_t cls, F inside) {
  for (std::int64_t y = 0; y < labels.h; ++y) {
    for (std::int64_t x = 0; x < labels.w; ++x) {
      if (inside(static_cast<double>(y), static_cast<double>(x))) labels.at(0, y, x) = cls;
    }
  }
}

void draw_shape(LabelMap& labels, std::int32_t cls, Rng& rng) {
  const double h = static_cast<double>(labels.h), w = static_cast<double>(labels.w);
  const double m = std::min(h, w);
  auto coord = [&rng](double len) { return rng.uniform() * len; };
  auto extent = [&rng, m] { return m * (0.12 + 0.16 * rng.uniform()); };
  switch (rng.below(3)) {
    case 0: {  // axis-aligned rectangle
      const double cy = coord(h), cx = coord(w), ry = extent(), rx = extent();
      paint(labels, cls, [=](double y, double x) {
        return std::abs(y - cy) <= ry && std::abs(x - cx) <= rx;
      });
      break;
    }
    case 1: {  // ellipse
      const double cy = coord(h), cx = coord(w), ry = extent(), rx = extent();
      paint(labels, cls, [=](double y, double x) {
        const double u = (y - cy) / ry, v = (x - cx) / rx;
        return u * u + v * v <= 1.0;
      });
      break;
    }
    default: {  // thick polyline through 3 or 4 points
      std::vector<Point> pts(3 + rng.below(2));
      for (auto& p : pts) p = {coord(h), coord(w)};
      const double r = std::max(1.5, m / 10.0);
      paint(labels, cls, [&pts, r](double y, double x) {
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
          if (segment_distance_sq({y, x}, pts[i], pts[i + 1]) <= r * r) return true;
        }
        return false;
      });
      break;
    }
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (num_classes < 2 || num_classes > 255) {
    throw std::invalid_argument("num_classes must lie in [2, 255]");
  }
  if (height < 1 || width < 1 || height > 65535 || width > 65535) {
    throw std::invalid_argument("canvas sides must lie in [1, 65535]");
  }
  if (min_shapes < 0 || max_shapes < min_shapes) {
    throw std::invalid_argument("shape count range must satisfy 0 <= min <= max");
  }
  if (!(color_jitter >= 0.0)) throw std::invalid_argument("color_jitter must be >= 0");
}

std::array<float, 3> class_color(int cls) {
  if (cls >= 0 && cls < static_cast<int>(kPalette.size())) return kPalette[cls];
  // Golden-ratio hue walk, full saturation and value 0.9.
  double hue = std::fmod(cls * 0.6180339887498949, 1.0) * 6.0;
  const double f = hue - std::floor(hue);
  const float v = 0.9f, p = 0.1f, q = static_cast<float>(0.9 - 0.8 * f),
              t = static_cast<float>(0.1 + 0.8 * f);
  switch (static_cast<int>(hue)) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Sample generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const std::int64_t h = spec.height, w = spec.width, hw = h * w;
  Sample s;
  s.labels = LabelMap::filled(1, h, w, 0);
  const auto shapes = rng.range(spec.min_shapes, spec.max_shapes);
  for (std::int64_t i = 0; i < shapes; ++i) {
    const auto cls = static_cast<std::int32_t>(1 + rng.below(spec.num_classes - 1));
    draw_shape(s.labels, cls, rng);
  }

  std::vector<float> raw(static_cast<std::size_t>(3 * hw));
  for (std::int64_t p = 0; p < hw; ++p) {
    const auto color = class_color(s.labels.values[p]);
    for (int c = 0; c < 3; ++c) {
      raw[c * hw + p] = color[c] + static_cast<float>(spec.color_jitter * rng.normal());
    }
  }
  // 3x3 box filter, window truncated at the border.
  std::vector<float> img(raw.size());
  for (int c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        float acc = 0.0f;
        int count = 0;
        for (std::int64_t yy = std::max<std::int64_t>(0, y - 1); yy <= std::min(h - 1, y + 1); ++yy) {
          for (std::int64_t xx = std::max<std::int64_t>(0, x - 1); xx <= std::min(w - 1, x + 1);
               ++xx) {
            acc += raw[c * hw + yy * w + xx];
            ++count;
          }
        }
        img[c * hw + y * w + x] = std::clamp(acc / static_cast<float>(count), 0.0f, 1.0f);
      }
    }
  }
  s.image = Tensor::from_data({1, 3, h, w}, std::move(img));
  return s;
}

void AugmentConfig::validate() const {
  if (!(scale_min > 0.0 && scale_max >= scale_min)) {
    throw std::invalid_argument("scale range must satisfy 0 < min <= max");
  }
  if (crop_h < 1 || crop_w < 1) throw std::invalid_argument("crop must be positive");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) {
    throw std::invalid_argument("hflip_prob must lie in [0, 1]");
  }
}

std::int64_t scaled_extent(std::int64_t len, double scale) {
  return std::max<std::int64_t>(1, std::llround(static_cast<double>(len) * scale));
}

AugmentParams draw_augment(const AugmentConfig& cfg, std::int64_t h, std::int64_t w,
                           std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  AugmentParams p;
  p.flip = rng.uniform() < cfg.hflip_prob;
  p.scale = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * rng.uniform();
  const std::int64_t sh = std::max(scaled_extent(h, p.scale), cfg.crop_h);
  const std::int64_t sw = std::max(scaled_extent(w, p.scale), cfg.crop_w);
  p.offset_y = rng.range(0, sh - cfg.crop_h);
  p.offset_x = rng.range(0, sw - cfg.crop_w);
  return p;
}

LabelMap resize_labels_nearest(const LabelMap& labels, std::int64_t out_h, std::int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_labels_nearest: empty output");
  // Nearest source of output d under src = d * (in - 1) / (out - 1), rounding
  // halves up, in exact integer arithmetic.
  auto source = [](std::int64_t d, std::int64_t in, std::int64_t out) {
    if (out == 1) return std::int64_t{0};
    return (2 * d * (in - 1) + (out - 1)) / (2 * (out - 1));
  };
  LabelMap out = LabelMap::filled(labels.n, out_h, out_w, 0);
  for (std::int64_t b = 0; b < labels.n; ++b) {
    for (std::int64_t y = 0; y < out_h; ++y) {
      const std::int64_t sy = source(y, labels.h, out_h);
      for (std::int64_t x = 0; x < out_w; ++x) {
        out.at(b, y, x) = labels.at(b, sy, source(x, labels.w, out_w));
      }
    }
  }
  return out;
}

Sample apply_augment(const Sample& s, const AugmentParams& p, std::int64_t crop_h,
                     std::int64_t crop_w) {
  const Shape is = s.image.shape();
  if (is.n != s.labels.n || is.h != s.labels.h || is.w != s.labels.w) {
    throw std::invalid_argument("apply_augment: image and labels disagree");
  }
  NoGradGuard guard;
  Tensor image = s.image;
  LabelMap labels = s.labels;
  if (p.flip) {
    image = flip_horizontal(image);
    for (std::int64_t b = 0; b < labels.n; ++b) {
      for (std::int64_t y = 0; y < labels.h; ++y) {
        auto row = labels.values.begin() + (b * labels.h + y) * labels.w;
        std::reverse(row, row + labels.w);
      }
    }
  }
  const std::int64_t sh = scaled_extent(is.h, p.scale), sw = scaled_extent(is.w, p.scale);
  image = bilinear_resize(image, sh, sw, true);
  labels = resize_labels_nearest(labels, sh, sw);

  const std::int64_t ph = std::max(sh, crop_h), pw = std::max(sw, crop_w);
  if (p.offset_y < 0 || p.offset_x < 0 || p.offset_y + crop_h > ph || p.offset_x + crop_w > pw) {
    throw std::invalid_argument("apply_augment: crop window outside the canvas");
  }
  Sample out;
  out.labels = LabelMap::filled(is.n, crop_h, crop_w, kIgnoreIndex);
  std::vector<float> crop(static_cast<std::size_t>(is.n * is.c * crop_h * crop_w), 0.0f);
  const auto src = image.data();
  for (std::int64_t y = 0; y < crop_h; ++y) {
    const std::int64_t sy = y + p.offset_y;
    if (sy >= sh) break;
    for (std::int64_t x = 0; x < crop_w; ++x) {
      const std::int64_t sx = x + p.offset_x;
      if (sx >= sw) break;
      for (std::int64_t b = 0; b < is.n; ++b) {
        out.labels.at(b, y, x) = labels.at(b, sy, sx);
        for (std::int64_t c = 0; c < is.c; ++c) {
          crop[((b * is.c + c) * crop_h + y) * crop_w + x] = src[((b * is.c + c) * sh + sy) * sw + sx];
        }
      }
    }
  }
  out.image = Tensor::from_data({is.n, is.c, crop_h, crop_w}, std::move(crop));
  return out;
}

Sample augment(const Sample& s, std::uint64_t seed, const AugmentConfig& cfg) {
  const auto p = draw_augment(cfg, s.labels.h, s.labels.w, seed);
  return apply_augment(s, p, cfg.crop_h, cfg.crop_w);
}

std::uint8_t quantize_unit(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

Raster image_to_raster(const Tensor& image) {
  const Shape s = image.shape();
  if (s.n != 1 || s.c != 3) throw std::invalid_argument("image_to_raster: expects (1,3,h,w)");
  Raster r{s.w, s.h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(3 * s.h * s.w))};
  const std::int64_t hw = s.h * s.w;
  for (std::int64_t p = 0; p < hw; ++p) {
    for (int c = 0; c < 3; ++c) r.pixels[3 * p + c] = quantize_unit(image.data()[c * hw + p]);
  }
  return r;
}

Tensor raster_to_image(const Raster& r) {
  if (r.channels != 3) throw NetpbmError("expected an RGB (P6) image");
  const std::int64_t hw = r.width * r.height;
  std::vector<float> v(static_cast<std::size_t>(3 * hw));
  for (std::int64_t p = 0; p < hw; ++p) {
    for (int c = 0; c < 3; ++c) v[c * hw + p] = static_cast<float>(r.pixels[3 * p + c]) / 255.0f;
  }
  return Tensor::from_data({1, 3, r.height, r.width}, std::move(v));
}

Raster labels_to_raster(const LabelMap& labels) {
  if (labels.n != 1) throw std::invalid_argument("labels_to_raster: expects a single map");
  Raster r{labels.w, labels.h, 1, std::vector<std::uint8_t>(labels.values.size())};
  for (std::size_t i = 0; i < labels.values.size(); ++i) {
    const std::int32_t v = labels.values[i];
    if (v < 0 || v > 255) throw std::out_of_range("label value does not fit a byte");
    r.pixels[i] = static_cast<std::uint8_t>(v);
  }
  return r;
}

LabelMap raster_to_labels(const Raster& r) {
  if (r.channels != 1) throw NetpbmError("expected a grayscale (P5) label map");
  LabelMap m{1, r.height, r.width, std::vector<std::int32_t>(r.pixels.begin(), r.pixels.end())};
  return m;
}

void save_sample(const Sample& s, const std::filesystem::path& image_path,
                 const std::filesystem::path& label_path) {
  write_netpbm(image_path, image_to_raster(s.image));
  write_netpbm(label_path, labels_to_raster(s.labels));
}

Sample load_sample(const std::filesystem::path& image_path,
                   const std::filesystem::path& label_path) {
  Sample s{raster_to_image(read_netpbm(image_path)), raster_to_labels(read_netpbm(label_path))};
  if (s.image.shape().h != s.labels.h || s.image.shape().w != s.labels.w) {
    throw NetpbmError("image " + image_path.string() + " and labels " + label_path.string() +
                      " differ in size");
  }
  return s;
}

SamplePaths sample_paths(const std::filesystem::path& root, const std::string& split,
                         std::int64_t index) {
  char stem[32];
  std::snprintf(stem, sizeof(stem), "%05lld", static_cast<long long>(index));
  const auto dir = root / split;
  return {dir / (std::string(stem) + "_img.ppm"), dir / (std::string(stem) + "_lab.pgm")};
}

std::uint64_t sample_seed(std::uint64_t seed, const std::string& split, std::int64_t index) {
  return derive_seed(derive_seed(seed, split), static_cast<std::uint64_t>(index));
}

void write_split(const std::filesystem::path& root, const std::string& split,
                 const SceneSpec& spec, std::int64_t count, std::uint64_t seed) {
  std::filesystem::create_directories(root / split);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto paths = sample_paths(root, split, i);
    save_sample(generate_scene(spec, sample_seed(seed, split, i)), paths.image, paths.labels);
  }
}

std::vector<Sample> load_split(const std::filesystem::path& root, const std::string& split) {
  if (!std::filesystem::is_directory(root / split)) {
    throw DatasetError("dataset split not found: " + (root / split).string());
  }
  std::vector<Sample> out;
  for (std::int64_t i = 0;; ++i) {
    const auto paths = sample_paths(root, split, i);
    if (!std::filesystem::exists(paths.image)) break;
    try {
      out.push_back(load_sample(paths.image, paths.labels));
    } catch (const NetpbmError& e) {
      throw DatasetError(e.what());
    }
  }
  if (out.empty()) throw DatasetError("dataset split is empty: " + (root / split).string());
  return out;
}

Sample stack_samples(std::span<const Sample> samples) {
  if (samples.empty()) throw std::invalid_argument("stack_samples: no samples");
  const Shape s0 = samples[0].image.shape();
  Sample out;
  out.labels.h = s0.h;
  out.labels.w = s0.w;
  std::vector<float> img;
  for (const auto& s : samples) {
    const Shape si = s.image.shape();
    if (si.c != s0.c || si.h != s0.h || si.w != s0.w || s.labels.h != s0.h || s.labels.w != s0.w) {
      throw std::invalid_argument("stack_samples: samples differ in size");
    }
    img.insert(img.end(), s.image.data().begin(), s.image.data().end());
    out.labels.values.insert(out.labels.values.end(), s.labels.values.begin(),
                             s.labels.values.end());
    out.labels.n += si.n;
  }
  out.image = Tensor::from_data({out.labels.n, s0.c, s0.h, s0.w}, std::move(img));
  return out;
}

}  // namespace bialign
