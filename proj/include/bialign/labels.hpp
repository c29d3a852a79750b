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
#ifndef BIALIGN_LABELS_HPP_
#define BIALIGN_LABELS_HPP_

#include <cstdint>
#include <vector>

namespace bialign {

inline constexpr std::int32_t kIgnoreIndex = 255;

/// Per-pixel class ids for a batch, row-major (n, h, w).
struct LabelMap {
  std::int64_t n = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<std::int32_t> values;

  static LabelMap filled(std::int64_t n, std::int64_t h, std::int64_t w, std::int32_t v) {
    return {n, h, w, std::vector<std::int32_t>(static_cast<std::size_t>(n * h * w), v)};
  }
  std::int64_t numel() const { return n * h * w; }
  std::int32_t at(std::int64_t b, std::int64_t y, std::int64_t x) const {
    return values[static_cast<std::size_t>((b * h + y) * w + x)];
  }
  std::int32_t& at(std::int64_t b, std::int64_t y, std::int64_t x) {
    return values[static_cast<std::size_t>((b * h + y) * w + x)];
  }
  bool operator==(const LabelMap&) const = default;
};

/// Binary boundary mask, row-major (n, h, w), values 0 or 1.
struct EdgeMap {
  std::int64_t n = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t at(std::int64_t b, std::int64_t y, std::int64_t x) const {
    return values[static_cast<std::size_t>((b * h + y) * w + x)];
  }
  bool operator==(const EdgeMap&) const = default;
};

}  // namespace bialign

#endif  // BIALIGN_LABELS_HPP_
