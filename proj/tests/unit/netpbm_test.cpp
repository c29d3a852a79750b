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
#include <string>

#include <gtest/gtest.h>

#include "bialign/netpbm.hpp"

namespace bialign {
namespace {

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

TEST(NetpbmTest, GrayFileSizeAndHeader) {
  const Raster r{64, 64, 1, std::vector<std::uint8_t>(64 * 64, 7)};
  const auto b = encode_netpbm(r);
  EXPECT_EQ(b.size(), 13u + 4096u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 13), "P5\n64 64\n255\n");
}

TEST(NetpbmTest, RoundTripGrayAndColor) {
  Raster g{3, 2, 1, {0, 1, 2, 253, 254, 255}};
  EXPECT_EQ(decode_netpbm(encode_netpbm(g)), g);
  Raster c{2, 1, 3, {10, 20, 30, 40, 50, 60}};
  const auto b = encode_netpbm(c);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 2), "P6");
  EXPECT_EQ(decode_netpbm(b), c);
}

TEST(NetpbmTest, AcceptsComments) {
  auto b = bytes("P5\n# made by hand\n2 # width\n1\n255\n");
  b.push_back(9);
  b.push_back(200);
  const auto r = decode_netpbm(b);
  EXPECT_EQ(r.width, 2);
  EXPECT_EQ(r.pixels, (std::vector<std::uint8_t>{9, 200}));
}

TEST(NetpbmTest, RejectsMalformedInput) {
  EXPECT_THROW(decode_netpbm(bytes("P2\n1 1\n255\n\x01")), NetpbmError);    // ASCII variant
  EXPECT_THROW(decode_netpbm(bytes("P5\n1 1\n65535\n\x01\x01")), NetpbmError);
  EXPECT_THROW(decode_netpbm(bytes("P5\n2 2\n255\n\x01")), NetpbmError);     // truncated
  EXPECT_THROW(decode_netpbm(bytes("P5\n1 1\n255\n\x01\x02")), NetpbmError); // trailing
  EXPECT_THROW(decode_netpbm(bytes("P5\n0 1\n255\n")), NetpbmError);
  EXPECT_THROW(decode_netpbm(bytes("P5\n1")), NetpbmError);
}

TEST(NetpbmTest, FileRoundTripAndMissingFile) {
  const auto p = std::filesystem::path(::testing::TempDir()) / "bialign_netpbm.pgm";
  const Raster r{4, 3, 1, std::vector<std::uint8_t>(12, 99)};
  write_netpbm(p, r);
  EXPECT_EQ(std::filesystem::file_size(p), 11u + 12u);
  EXPECT_EQ(read_netpbm(p), r);
  EXPECT_THROW(read_netpbm(p.string() + ".missing"), NetpbmError);
}

}  // namespace
}  // namespace bialign
