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
#include "bialign/visuals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bialign/config.hpp"
#include "bialign/data.hpp"
#include "bialign/metrics.hpp"

namespace bialign {

namespace {

std::array<float, 3> hsv_to_rgb(double hue, double value) {
  const double h = hue * 6.0;
  const double f = h - std::floor(h);
  const auto v = static_cast<float>(value);
  const auto q = static_cast<float>(value * (1.0 - f));
  const auto t = static_cast<float>(value * f);
  switch (static_cast<int>(h) % 6) {
    case 0: return {v, t, 0.0f};
    case 1: return {q, v, 0.0f};
    case 2: return {0.0f, v, t};
    case 3: return {0.0f, q, v};
    case 4: return {t, 0.0f, v};
    default: return {v, 0.0f, q};
  }
}

void check_single(const Tensor& t, std::int64_t channels, const char* what) {
  if (t.shape().n != 1 || t.shape().c != channels) {
    throw std::invalid_argument(std::string(what) + ": unexpected shape " + t.shape().str());
  }
}

}  // namespace

Raster label_colors(const LabelMap& labels) {
  if (labels.n != 1) throw std::invalid_argument("label_colors: expects a single map");
  Raster r{labels.w, labels.h, 3, std::vector<std::uint8_t>(labels.values.size() * 3, 0)};
  for (std::size_t i = 0; i < labels.values.size(); ++i) {
    if (labels.values[i] == kIgnoreIndex) continue;
    const auto c = class_color(labels.values[i]);
    for (int k = 0; k < 3; ++k) r.pixels[3 * i + k] = quantize_unit(c[k]);
  }
  return r;
}

Raster flow_colors(const Tensor& flow) {
  check_single(flow, 2, "flow_colors");
  const std::int64_t hw = flow.shape().plane();
  const auto v = flow.data();
  double max_mag = 0.0;
  for (std::int64_t p = 0; p < hw; ++p) {
    max_mag = std::max(max_mag, std::hypot(double{v[p]}, double{v[hw + p]}));
  }
  Raster r{flow.shape().w, flow.shape().h, 3, std::vector<std::uint8_t>(hw * 3, 0)};
  if (max_mag == 0.0) return r;
  for (std::int64_t p = 0; p < hw; ++p) {
    const double dx = v[p], dy = v[hw + p];
    double hue = std::atan2(dy, dx) / (2.0 * std::numbers::pi);
    if (hue < 0.0) hue += 1.0;
    const auto c = hsv_to_rgb(hue, std::hypot(dx, dy) / max_mag);
    for (int k = 0; k < 3; ++k) r.pixels[3 * p + k] = quantize_unit(c[k]);
  }
  return r;
}

Raster gray_map(const Tensor& map) {
  check_single(map, 1, "gray_map");
  Raster r{map.shape().w, map.shape().h, 1, std::vector<std::uint8_t>(map.numel())};
  for (std::int64_t i = 0; i < map.numel(); ++i) r.pixels[i] = quantize_unit(map.data()[i]);
  return r;
}

std::vector<std::filesystem::path> dump_visuals(const Checkpoint& ckpt, const Tensor& image,
                                                const std::filesystem::path& out_dir) {
  const RunConfig cfg = parse_config(ckpt.config_text);
  check_single(image, 3, "dump_visuals");
  ModelState state = ckpt.state.clone();
  NoGradGuard guard;
  const auto out = bialignnet_forward(image, state, cfg.model, Mode::kEval);

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const Raster& r) {
    written.push_back(out_dir / name);
    write_netpbm(written.back(), r);
  };
  emit("prediction.ppm", label_colors(argmax_labels(out.s_logits)));
  emit("indicator.pgm", gray_map(out.d));
  for (const auto& [dir, trace] : {std::pair{"cp_to_sp", &out.cp_to_sp}, std::pair{"sp_to_cp", &out.sp_to_cp}}) {
    if (!*trace) continue;
    emit(std::string("flow_") + dir + ".ppm", flow_colors((*trace)->gated_flow));
    if (cfg.model.gated()) emit(std::string("gate_") + dir + ".pgm", gray_map((*trace)->gate));
  }
  return written;
}

}  // namespace bialign
