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
#ifndef BIALIGN_GRADCHECK_HPP_
#define BIALIGN_GRADCHECK_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bialign {

inline constexpr double kGradcheckTolerance = 1e-3;

struct GradcheckResult {
  std::string name;
  double max_rel_error = 0.0;
  bool passed() const { return max_rel_error <= kGradcheckTolerance; }
};

/// Names of the built-in checks, e.g. "conv2d.weight" or "warp_bilinear.flow".
std::vector<std::string> gradcheck_names();

/// Runs every check whose name equals `filter` or starts with `filter`
/// followed by '.'; an empty filter runs all. Each check compares tape
/// gradients against central differences in double precision on seeded
/// random inputs. Throws std::invalid_argument if nothing matches.
std::vector<GradcheckResult> run_gradchecks(std::string_view filter = {},
                                            std::uint64_t seed = 2024);

}  // namespace bialign

#endif  // BIALIGN_GRADCHECK_HPP_
