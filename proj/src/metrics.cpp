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
#include "bialign/metrics.hpp"

#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace bialign {

ConfusionMatrix::ConfusionMatrix(int num_classes) : c_(num_classes) {
  if (num_classes < 1) throw std::invalid_argument("ConfusionMatrix: num_classes must be >= 1");
  counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(int truth, int pred) {
  if (truth < 0 || truth >= c_ || pred < 0 || pred >= c_) {
    throw std::out_of_range(fmt::format("class id outside [0, {}): truth {}, pred {}", c_, truth, pred));
  }
  ++counts_[static_cast<std::size_t>(truth * c_ + pred)];
}

void accumulate_confusion(const LabelMap& pred, const LabelMap& truth, ConfusionMatrix& cm,
                          std::int32_t ignore_index) {
  if (pred.n != truth.n || pred.h != truth.h || pred.w != truth.w ||
      pred.values.size() != truth.values.size()) {
    throw std::invalid_argument("accumulate_confusion: prediction and truth differ in shape");
  }
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    if (pred.values[i] == ignore_index) {
      throw std::invalid_argument("accumulate_confusion: prediction contains the ignore index");
    }
    if (truth.values[i] == ignore_index) continue;
    cm.add(truth.values[i], pred.values[i]);
  }
}

MiouReport miou(const ConfusionMatrix& cm) {
  const int c = cm.num_classes();
  MiouReport r;
  r.iou.resize(static_cast<std::size_t>(c));
  std::uint64_t correct = 0;
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < c; ++k) {
    std::uint64_t row = 0, col = 0;
    for (int j = 0; j < c; ++j) {
      row += cm.at(k, j);
      col += cm.at(j, k);
    }
    const std::uint64_t tp = cm.at(k, k);
    correct += tp;
    const std::uint64_t uni = row + col - tp;
    if (uni == 0) continue;
    r.iou[k] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += *r.iou[k];
    ++present;
  }
  r.miou = present ? sum / present : 0.0;
  const std::uint64_t total = cm.total();
  r.pixel_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return r;
}

std::string MiouReport::to_text() const {
  std::string s;
  for (std::size_t k = 0; k < iou.size(); ++k) {
    s += iou[k] ? fmt::format("class {}: IoU {:.4f}\n", k, *iou[k])
                : fmt::format("class {}: IoU n/a (absent)\n", k);
  }
  s += fmt::format("mIoU {:.4f}\npixel accuracy {:.4f}\n", miou, pixel_accuracy);
  return s;
}

LabelMap argmax_labels(const Tensor& logits) {
  const Shape s = logits.shape();
  const std::int64_t hw = s.h * s.w;
  LabelMap out = LabelMap::filled(s.n, s.h, s.w, 0);
  const auto v = logits.data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t p = 0; p < hw; ++p) {
      std::int32_t best = 0;
      for (std::int64_t c = 1; c < s.c; ++c) {
        if (v[(n * s.c + c) * hw + p] > v[(n * s.c + best) * hw + p]) {
          best = static_cast<std::int32_t>(c);
        }
      }
      out.values[n * hw + p] = best;
    }
  }
  return out;
}

}  // namespace bialign
