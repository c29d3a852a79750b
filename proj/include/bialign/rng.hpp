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
#ifndef BIALIGN_RNG_HPP_
#define BIALIGN_RNG_HPP_

#include <cstdint>
#include <string_view>

namespace bialign {

/// splitmix64 step: advances `state` by 0x9E3779B97F4A7C15 and returns the
/// mixed value (Steele, Lea, Flood constants).
std::uint64_t splitmix64(std::uint64_t& state);

/// Portable generator used for every random draw in the library.
///
/// State: xoshiro256** seeded with four consecutive splitmix64 outputs
/// starting from `seed`.
///  - uniform():  (next_u64() >> 11) * 2^-53, in [0, 1).
///  - normal():   Box-Muller, cosine branch only. Draws u1 then u2 with
///                u1 = 1 - uniform() in (0, 1], returns
///                sqrt(-2 ln u1) * cos(2 pi u2). Each call consumes exactly
///                two 64-bit outputs; no value is cached.
///  - below(n):   floor(uniform() * n).
/// Reimplementing these four rules reproduces every stream bit-for-bit
/// given the same libm log/cos.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();
  double normal();
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi);

 private:
  std::uint64_t s_[4];
};

/// Derives an independent seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace bialign

#endif  // BIALIGN_RNG_HPP_
