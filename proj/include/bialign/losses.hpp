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
#ifndef BIALIGN_LOSSES_HPP_
#define BIALIGN_LOSSES_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "bialign/labels.hpp"
#include "bialign/tensor.hpp"

namespace bialign {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

struct LossConfig {
  double lambda = 25.0;                      // weight of the edge BCE term
  double t_b = 0.8;                          // indicator threshold for hard pixels
  double hard_keep_fraction = 1.0 / 16.0;    // K = ceil(valid * fraction)
  double ohem_prob_threshold = 0.7;
  double ohem_min_kept_fraction = 1.0 / 16.0;
  std::int32_t ignore_index = kIgnoreIndex;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

template <typename T>
struct PixelCrossEntropy {
  BasicTensor<T> per_pixel;  // (n,1,h,w); 0 at ignored pixels
  BasicTensor<T> mean;       // mean over valid pixels; 0 if there are none
  std::vector<std::int64_t> valid;  // flat (n,h,w) indices of non-ignored pixels
};

/// A loss averaged over a selected subset of pixels.
template <typename T>
struct SelectedLoss {
  BasicTensor<T> value;
  std::vector<std::int64_t> kept;  // flat (n,h,w) indices, ascending
};

template <typename T>
struct LossBreakdown {
  BasicTensor<T> total;
  BasicTensor<T> bce;
  BasicTensor<T> hard;
  BasicTensor<T> ohem;
};

/// loss_i = -log softmax(logits)_{g_i}; throws std::out_of_range on a label
/// that is neither in [0, C) nor the ignore index.
template <typename T>
PixelCrossEntropy<T> cross_entropy_pixelwise(const BasicTensor<T>& logits,
                                             const LabelMap& labels,
                                             std::int32_t ignore_index = kIgnoreIndex);

/// Indices of the `k` largest losses among `candidates`; ties go to the
/// lower index. Result is sorted ascending.
std::vector<std::int64_t> top_k_by_loss(std::span<const double> losses,
                                        std::span<const std::int64_t> candidates,
                                        std::size_t k);

/// Cross-entropy with online hard example mining.
///
/// Keeps valid pixels whose ground-truth probability is below
/// ohem_prob_threshold; when fewer than ceil(valid * ohem_min_kept_fraction)
/// qualify, keeps that many largest losses instead.
template <typename T>
SelectedLoss<T> ohem_ce(const BasicTensor<T>& logits, const LabelMap& labels,
                        const LossConfig& cfg);

/// Mean binary cross-entropy between indicator d (n,1,h,w) and edges b.
template <typename T>
BasicTensor<T> bce(const BasicTensor<T>& d, const EdgeMap& b);

/// Edge-guided hard pixel mining.
///
/// Candidates are valid pixels with d > t_b. Of those, the
/// K = min(|candidates|, ceil(valid * hard_keep_fraction)) pixels with the
/// largest cross-entropy (smallest ground-truth probability) are averaged.
/// Empty candidate set gives 0 with zero gradient.
template <typename T>
SelectedLoss<T> hard_pixel_loss(const BasicTensor<T>& logits, const LabelMap& labels,
                                const BasicTensor<T>& d, const LossConfig& cfg);

/// lambda * bce(d, b) + hard_pixel_loss + ohem_ce.
template <typename T>
LossBreakdown<T> total_loss(const BasicTensor<T>& s_logits, const BasicTensor<T>& d,
                            const EdgeMap& b, const LabelMap& g, const LossConfig& cfg);

}  // namespace bialign

#endif  // BIALIGN_LOSSES_HPP_
