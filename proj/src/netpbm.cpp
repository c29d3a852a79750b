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
#include "bialign/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

namespace bialign {

namespace {

constexpr std::int64_t kMaxSide = 65535;

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::int64_t number(const char* what) {
    skip_space_and_comments();
    std::int64_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw NetpbmError(std::string("netpbm: ") + what + " too large");
    }
    if (digits == 0) throw NetpbmError(std::string("netpbm: expected ") + what);
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw NetpbmError("netpbm: missing whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void check_raster(const Raster& r) {
  if (r.channels != 1 && r.channels != 3) throw NetpbmError("netpbm: channels must be 1 or 3");
  if (r.width < 1 || r.height < 1 || r.width > kMaxSide || r.height > kMaxSide) {
    throw NetpbmError("netpbm: dimensions out of range");
  }
  if (static_cast<std::int64_t>(r.pixels.size()) != r.width * r.height * r.channels) {
    throw NetpbmError("netpbm: pixel buffer does not match dimensions");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_netpbm(const Raster& r) {
  check_raster(r);
  const std::string header = std::string(r.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), r.pixels.begin(), r.pixels.end());
  return out;
}

Raster decode_netpbm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw NetpbmError("netpbm: not a binary P5/P6 file");
  }
  Raster r;
  r.channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader reader(bytes);
  reader.advance(2);
  r.width = reader.number("width");
  r.height = reader.number("height");
  const std::int64_t maxval = reader.number("maxval");
  if (maxval != 255) throw NetpbmError("netpbm: only maxval 255 is supported");
  if (r.width < 1 || r.height < 1 || r.width > kMaxSide || r.height > kMaxSide) {
    throw NetpbmError("netpbm: dimensions out of range");
  }
  reader.end_of_header();
  const std::size_t payload = static_cast<std::size_t>(r.width * r.height * r.channels);
  if (bytes.size() - reader.pos() != payload) {
    throw NetpbmError("netpbm: expected " + std::to_string(payload) + " payload bytes, found " +
                      std::to_string(bytes.size() - reader.pos()));
  }
  r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos()), bytes.end());
  return r;
}

void write_netpbm(const std::filesystem::path& path, const Raster& r) {
  const auto bytes = encode_netpbm(r);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NetpbmError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw NetpbmError("write failed: " + path.string());
}

Raster read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NetpbmError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_netpbm(bytes);
  } catch (const NetpbmError& e) {
    throw NetpbmError(path.string() + ": " + e.what());
  }
}

}  // namespace bialign
