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
#ifndef BIALIGN_CHECKPOINT_HPP_
#define BIALIGN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bialign/model.hpp"

namespace bialign {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, little-endian throughout:
///
///   "BALN"            4 bytes
///   version           u32
///   iteration         u32
///   config digest     u64, fnv1a64 of the config text
///   config text       u32 length + bytes
///   parameters        tensor section
///   momentum buffers  tensor section
///   BN running stats  tensor section
///
/// A tensor section is a u32 count followed by, per tensor in name order:
/// u32 name length, name bytes, four u32 dims (n, c, h, w), then n*c*h*w
/// IEEE-754 binary32 values.
struct Checkpoint {
  std::uint32_t iteration = 0;
  std::string config_text;
  ModelState state;
  ParameterSet velocity;

  std::uint64_t config_digest() const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError on bad magic, a version other than
/// kCheckpointVersion, a digest mismatch or truncation.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes to a temporary sibling and renames, so an interrupted save never
/// leaves a partial file at `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bialign

#endif  // BIALIGN_CHECKPOINT_HPP_
