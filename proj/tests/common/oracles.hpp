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
// Brute-force reference implementations shared by the unit tests and the
// acceptance runner. They work on plain vectors and recompute everything
// from the definitions, without touching the library's tensor code.

#ifndef BIALIGN_TESTS_ORACLES_HPP_
#define BIALIGN_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr std::int32_t kIgnore = 255;
inline constexpr double kClamp = 1e-7;

// Logits laid out (n, c, h, w); labels (n, h, w).
struct Instance {
  int n = 1, c = 2, h = 1, w = 1;
  std::vector<double> logits;
  std::vector<std::int32_t> labels;
  std::vector<double> d;  // (n, h, w) indicator, may be empty
};

// Ground-truth class probability per pixel; nullopt where ignored.
inline std::vector<std::optional<double>> gt_prob(const Instance& in) {
  const int hw = in.h * in.w;
  std::vector<std::optional<double>> out(static_cast<std::size_t>(in.n * hw));
  for (int b = 0; b < in.n; ++b) {
    for (int p = 0; p < hw; ++p) {
      const std::int32_t g = in.labels[b * hw + p];
      if (g == kIgnore) continue;
      double mx = -INFINITY;
      for (int k = 0; k < in.c; ++k) mx = std::max(mx, in.logits[(b * in.c + k) * hw + p]);
      double z = 0.0;
      for (int k = 0; k < in.c; ++k) z += std::exp(in.logits[(b * in.c + k) * hw + p] - mx);
      out[b * hw + p] = std::exp(in.logits[(b * in.c + g) * hw + p] - mx) / z;
    }
  }
  return out;
}

inline double ce_of(double p) { return -std::log(std::max(p, kClamp)); }

struct Selection {
  std::vector<std::int64_t> kept;  // ascending
  double value = 0.0;
};

// Ranks by loss descending, index ascending, via a full sort.
inline std::vector<std::int64_t> largest(const std::vector<std::pair<double, std::int64_t>>& pool,
                                         std::size_t k) {
  auto sorted = pool;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::int64_t> idx;
  for (std::size_t i = 0; i < std::min(k, sorted.size()); ++i) idx.push_back(sorted[i].second);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Selection mean_over(const std::vector<std::optional<double>>& prob,
                           std::vector<std::int64_t> kept) {
  Selection s;
  s.kept = std::move(kept);
  for (auto i : s.kept) s.value += ce_of(*prob[i]);
  if (!s.kept.empty()) s.value /= static_cast<double>(s.kept.size());
  return s;
}

inline std::size_t ceil_frac(std::size_t n, double f) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * f));
}

inline Selection ohem(const Instance& in, double threshold, double min_kept_fraction) {
  const auto prob = gt_prob(in);
  std::vector<std::pair<double, std::int64_t>> valid;
  std::vector<std::int64_t> hard;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (!prob[i]) continue;
    valid.emplace_back(ce_of(*prob[i]), static_cast<std::int64_t>(i));
    if (*prob[i] < threshold) hard.push_back(static_cast<std::int64_t>(i));
  }
  const std::size_t min_kept = ceil_frac(valid.size(), min_kept_fraction);
  if (hard.size() < min_kept) hard = largest(valid, min_kept);
  return mean_over(prob, hard);
}

inline Selection hard_pixels(const Instance& in, double t_b, double keep_fraction) {
  const auto prob = gt_prob(in);
  std::size_t valid = 0;
  std::vector<std::pair<double, std::int64_t>> cand;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (!prob[i]) continue;
    ++valid;
    if (in.d[i] > t_b) cand.emplace_back(ce_of(*prob[i]), static_cast<std::int64_t>(i));
  }
  const std::size_t k = std::min(cand.size(), ceil_frac(valid, keep_fraction));
  return mean_over(prob, largest(cand, k));
}

inline double bce(const std::vector<double>& d, const std::vector<std::uint8_t>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p = std::clamp(d[i], kClamp, 1.0 - kClamp);
    s += b[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return s / static_cast<double>(d.size());
}

// Per-class IoU from direct tp/fp/fn counts; classes with an empty union
// are skipped in the mean.
struct Miou {
  std::vector<std::optional<double>> iou;
  double miou = 0.0;
  double accuracy = 0.0;
};

inline Miou miou(const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& truth,
                 int classes) {
  Miou r;
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == kIgnore) continue;
      const bool t = truth[i] == c, p = pred[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    if (tp + fp + fn == 0) {
      r.iou.emplace_back();
      continue;
    }
    r.iou.emplace_back(static_cast<double>(tp) / static_cast<double>(tp + fp + fn));
    sum += *r.iou.back();
    ++present;
  }
  r.miou = present ? sum / present : 0.0;
  std::uint64_t hit = 0, total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kIgnore) continue;
    ++total;
    hit += pred[i] == truth[i];
  }
  r.accuracy = total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
  return r;
}

// A pixel is an edge iff some in-bounds 4-neighbour differs.
inline std::vector<std::uint8_t> edges(const std::vector<std::int32_t>& lab, int n, int h, int w) {
  std::vector<std::uint8_t> e(lab.size(), 0);
  const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int k = 0; k < 4; ++k) {
          const int yy = y + dy[k], xx = x + dx[k];
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          if (lab[(b * h + yy) * w + xx] != lab[(b * h + y) * w + x]) e[(b * h + y) * w + x] = 1;
        }
  return e;
}

}  // namespace oracle

#endif  // BIALIGN_TESTS_ORACLES_HPP_
