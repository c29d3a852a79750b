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
#ifndef BIALIGN_VISUALS_HPP_
#define BIALIGN_VISUALS_HPP_

#include <filesystem>
#include <vector>

#include "bialign/checkpoint.hpp"
#include "bialign/labels.hpp"
#include "bialign/netpbm.hpp"
#include "bialign/tensor.hpp"

namespace bialign {

/// Class ids painted with class_color(); ignore pixels are black.
Raster label_colors(const LabelMap& labels);

/// Color wheel rendering of a (1,2,h,w) flow: hue is the direction
/// atan2(dy, dx), saturation 1, value the magnitude divided by the largest
/// magnitude in the field. An all-zero field renders black.
Raster flow_colors(const Tensor& flow);

/// (1,1,h,w) values in [0,1] as gray bytes round(255 * v).
Raster gray_map(const Tensor& map);

/// Runs the checkpointed model on `image` (1,3,h,w) in eval mode and writes
/// prediction.ppm, indicator.pgm, and per alignment direction
/// flow_<dir>.ppm and, when gated, gate_<dir>.pgm. Returns the paths
/// written.
std::vector<std::filesystem::path> dump_visuals(const Checkpoint& ckpt, const Tensor& image,
                                                const std::filesystem::path& out_dir);

}  // namespace bialign

#endif  // BIALIGN_VISUALS_HPP_
