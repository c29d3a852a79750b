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
// Bilinear sampling primitives shared by resizing and flow warping.
#ifndef BIALIGN_RESAMPLE_HPP_
#define BIALIGN_RESAMPLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace bialign {

// Two neighbouring indices along one axis and the weight of the second.
struct AxisSample {
  std::int64_t i0 = 0;
  std::int64_t i1 = 0;
  double t = 0.0;
  // False when the position was clamped to the border; the sample then has
  // no derivative with respect to the position.
  bool inside = true;
};

// Sample at continuous position `pos` on an axis of length `len`, clamping
// out-of-range positions to the border pixels.
inline AxisSample axis_sample(double pos, std::int64_t len) {
  AxisSample s;
  const double hi = static_cast<double>(len - 1);
  if (pos < 0.0 || pos > hi) {
    s.inside = false;
    pos = std::clamp(pos, 0.0, hi);
  }
  const double f = std::floor(pos);
  s.i0 = std::min(static_cast<std::int64_t>(f), len - 1);
  s.i1 = std::min(s.i0 + 1, len - 1);
  s.t = pos - static_cast<double>(s.i0);
  return s;
}

inline std::vector<AxisSample> resample_axis(std::int64_t in, std::int64_t out,
                                             bool align_corners) {
  std::vector<AxisSample> v(static_cast<std::size_t>(out));
  for (std::int64_t d = 0; d < out; ++d) {
    double pos;
    if (align_corners) {
      pos = out == 1 ? 0.0 : static_cast<double>(d * (in - 1)) / static_cast<double>(out - 1);
    } else {
      pos = std::max(0.0, (static_cast<double>(d) + 0.5) * static_cast<double>(in) /
                                  static_cast<double>(out) - 0.5);
    }
    v[d] = axis_sample(pos, in);
  }
  return v;
}

// Lerp-form bilinear interpolation. std::lerp is exact at t = 0 and bounded
// by its endpoints, so zero offsets reproduce the source bit-for-bit and the
// result never leaves [min, max] of the four neighbours.
template <typename T>
T bilerp(const T* src, std::int64_t width, const AxisSample& row, const AxisSample& col) {
  const T tx = static_cast<T>(col.t);
  const T ty = static_cast<T>(row.t);
  const T top = std::lerp(src[row.i0 * width + col.i0], src[row.i0 * width + col.i1], tx);
  const T bot = std::lerp(src[row.i1 * width + col.i0], src[row.i1 * width + col.i1], tx);
  return std::lerp(top, bot, ty);
}

template <typename T>
void bilerp_scatter(double* dst, std::int64_t width, const AxisSample& row,
                    const AxisSample& col, double g) {
  const double tx = static_cast<T>(col.t);
  const double ty = static_cast<T>(row.t);
  dst[row.i0 * width + col.i0] += g * (1.0 - ty) * (1.0 - tx);
  dst[row.i0 * width + col.i1] += g * (1.0 - ty) * tx;
  dst[row.i1 * width + col.i0] += g * ty * (1.0 - tx);
  dst[row.i1 * width + col.i1] += g * ty * tx;
}

}  // namespace bialign

#endif  // BIALIGN_RESAMPLE_HPP_
