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
#include "bialign/edges.hpp"

#include <algorithm>
#include <stdexcept>

namespace bialign {

EdgeMap extract_edge_map(const LabelMap& labels, int thickness) {
  if (thickness < 1) throw std::invalid_argument("edge thickness must be >= 1");
  const std::int64_t h = labels.h, w = labels.w;
  EdgeMap e{labels.n, h, w, std::vector<std::uint8_t>(labels.values.size(), 0)};
  for (std::int64_t b = 0; b < labels.n; ++b) {
    const std::int32_t* lab = labels.values.data() + b * h * w;
    std::uint8_t* out = e.values.data() + b * h * w;
    // Each differing horizontal/vertical pair marks both of its pixels.
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x + 1 < w; ++x) {
        if (lab[y * w + x] != lab[y * w + x + 1]) out[y * w + x] = out[y * w + x + 1] = 1;
      }
    }
    for (std::int64_t y = 0; y + 1 < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        if (lab[y * w + x] != lab[(y + 1) * w + x]) out[y * w + x] = out[(y + 1) * w + x] = 1;
      }
    }
    if (thickness == 1) continue;
    const std::int64_t r = thickness - 1;
    // Separable square dilation: rows, then columns.
    std::vector<std::uint8_t> tmp(static_cast<std::size_t>(h * w), 0);
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        if (!out[y * w + x]) continue;
        for (std::int64_t k = std::max<std::int64_t>(0, x - r); k <= std::min(w - 1, x + r); ++k) {
          tmp[y * w + k] = 1;
        }
      }
    }
    std::fill(out, out + h * w, 0);
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        if (!tmp[y * w + x]) continue;
        for (std::int64_t k = std::max<std::int64_t>(0, y - r); k <= std::min(h - 1, y + r); ++k) {
          out[k * w + x] = 1;
        }
      }
    }
  }
  return e;
}

}  // namespace bialign
