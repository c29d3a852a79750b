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
#ifndef BIALIGN_METRICS_HPP_
#define BIALIGN_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bialign/labels.hpp"
#include "bialign/tensor.hpp"

namespace bialign {

/// counts[t * C + p]: pixels with truth t predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return c_; }
  std::uint64_t at(int truth, int pred) const { return counts_[truth * c_ + pred]; }
  std::uint64_t total() const;
  void add(int truth, int pred);

 private:
  int c_;
  std::vector<std::uint64_t> counts_;
};

/// Adds every pixel whose truth is not ignore_index. Throws
/// std::invalid_argument on a shape mismatch or an ignored prediction and
/// std::out_of_range on a class id >= C.
void accumulate_confusion(const LabelMap& pred, const LabelMap& truth, ConfusionMatrix& cm,
                          std::int32_t ignore_index = kIgnoreIndex);

struct MiouReport {
  std::vector<std::optional<double>> iou;  // empty union -> nullopt
  double miou = 0.0;                       // mean over classes with a non-empty union
  double pixel_accuracy = 0.0;

  std::string to_text() const;
};

MiouReport miou(const ConfusionMatrix& cm);

/// Channel argmax per pixel of (n,C,h,w) logits; ties go to the lower class.
LabelMap argmax_labels(const Tensor& logits);

}  // namespace bialign

#endif  // BIALIGN_METRICS_HPP_
