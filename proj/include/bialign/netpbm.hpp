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
#ifndef BIALIGN_NETPBM_HPP_
#define BIALIGN_NETPBM_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace bialign {

/// Thrown for unreadable files, malformed headers and payload size
/// mismatches.
class NetpbmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An 8-bit raster. channels is 1 (P5, gray) or 3 (P6, interleaved RGB).
struct Raster {
  std::int64_t width = 0;
  std::int64_t height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  bool operator==(const Raster&) const = default;
};

/// Encodes a binary P5/P6 file with maxval 255. The header is
/// "P5\n<w> <h>\n255\n" (P6 likewise).
std::vector<std::uint8_t> encode_netpbm(const Raster& r);

/// Parses P5/P6 with maxval 255. Comments ('#' to end of line) are accepted
/// between header tokens. Trailing bytes after the payload are an error.
Raster decode_netpbm(const std::vector<std::uint8_t>& bytes);

void write_netpbm(const std::filesystem::path& path, const Raster& r);
Raster read_netpbm(const std::filesystem::path& path);

}  // namespace bialign

#endif  // BIALIGN_NETPBM_HPP_
