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
#ifndef BIALIGN_EDGES_HPP_
#define BIALIGN_EDGES_HPP_

#include "bialign/labels.hpp"

namespace bialign {

/// Boundary mask of a label map.
///
/// A pixel is an edge pixel iff one of its in-bounds 4-neighbours carries a
/// different label; the ignore index counts as its own label and nothing
/// outside the image is considered. thickness > 1 dilates the result with a
/// square of radius thickness - 1. Throws std::invalid_argument for
/// thickness < 1.
EdgeMap extract_edge_map(const LabelMap& labels, int thickness = 1);

}  // namespace bialign

#endif  // BIALIGN_EDGES_HPP_
