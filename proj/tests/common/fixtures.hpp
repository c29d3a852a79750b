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
// Random test instances and conversions into library types.

#ifndef BIALIGN_TESTS_FIXTURES_HPP_
#define BIALIGN_TESTS_FIXTURES_HPP_

#include <random>

#include "bialign/labels.hpp"
#include "bialign/tensor.hpp"
#include "oracles.hpp"

namespace fixtures {

// Random logits in [-4, 4], labels with about 10% ignore, indicator in (0, 1).
inline oracle::Instance random_instance(std::uint64_t seed, int max_side = 32, int max_classes = 6) {
  std::mt19937_64 gen(seed);
  auto pick = [&gen](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  std::uniform_real_distribution<double> u(0.0, 1.0);
  oracle::Instance in;
  in.n = pick(1, 2);
  in.c = pick(2, max_classes);
  in.h = pick(1, max_side);
  in.w = pick(1, max_side);
  const int px = in.n * in.h * in.w;
  for (int i = 0; i < px * in.c; ++i) in.logits.push_back(8.0 * u(gen) - 4.0);
  for (int i = 0; i < px; ++i) {
    in.labels.push_back(u(gen) < 0.1 ? oracle::kIgnore : pick(0, in.c - 1));
    in.d.push_back(u(gen));
  }
  return in;
}

inline bialign::TensorD logits_of(const oracle::Instance& in) {
  return bialign::TensorD::from_data({in.n, in.c, in.h, in.w}, in.logits);
}

inline bialign::TensorD indicator_of(const oracle::Instance& in) {
  return bialign::TensorD::from_data({in.n, 1, in.h, in.w}, in.d);
}

inline bialign::LabelMap labels_of(const oracle::Instance& in) {
  return {in.n, in.h, in.w, in.labels};
}

// Random label map with `classes` values, drawn as a few blobs so edges are
// neither everywhere nor nowhere.
inline bialign::LabelMap random_labels(std::uint64_t seed, int max_side, int classes,
                                       bool with_ignore) {
  std::mt19937_64 gen(seed);
  auto pick = [&gen](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  const int h = pick(1, max_side), w = pick(1, max_side);
  bialign::LabelMap m = bialign::LabelMap::filled(1, h, w, 0);
  const int rects = pick(0, 6);
  for (int r = 0; r < rects; ++r) {
    const int y0 = pick(0, h - 1), x0 = pick(0, w - 1);
    const int y1 = pick(y0, h - 1), x1 = pick(x0, w - 1);
    const int v = (with_ignore && pick(0, 5) == 0) ? oracle::kIgnore : pick(0, classes - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) m.at(0, y, x) = v;
  }
  // Salt noise on a few pixels.
  for (int k = pick(0, 4); k > 0; --k) m.at(0, pick(0, h - 1), pick(0, w - 1)) = pick(0, classes - 1);
  return m;
}

}  // namespace fixtures

#endif  // BIALIGN_TESTS_FIXTURES_HPP_
