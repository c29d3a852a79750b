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
#include "bialign/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bialign/nn.hpp"
#include "bialign/ops.hpp"

namespace bialign {

void LossConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(t_b > 0.0 && t_b < 1.0)) throw std::invalid_argument("t_b must lie in (0, 1)");
  for (double f : {hard_keep_fraction, ohem_min_kept_fraction}) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("keep fractions must lie in (0, 1]");
  }
  if (!(ohem_prob_threshold > 0.0 && ohem_prob_threshold <= 1.0)) {
    throw std::invalid_argument("ohem_prob_threshold must lie in (0, 1]");
  }
}

namespace {

std::size_t ceil_fraction(std::size_t count, double fraction) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(count) * fraction));
}

void check_label_shape(const Shape& s, const LabelMap& labels, const char* op) {
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w ||
      static_cast<std::int64_t>(labels.values.size()) != labels.numel()) {
    throw std::invalid_argument(std::string(op) + ": labels do not match " + s.str());
  }
}

// Picks -max(logp[g], log(kProbClamp)) per pixel; ignored pixels give 0.
template <typename T>
BasicTensor<T> nll_pick(const BasicTensor<T>& logp, const LabelMap& labels,
                        std::int32_t ignore_index) {
  const Shape s = logp.shape();
  const std::int64_t hw = s.h * s.w;
  const double floor_logp = std::log(kProbClamp);
  auto out = detail::make_output<T>({s.n, 1, s.h, s.w});
  auto y = out.mutable_data();
  std::vector<std::int64_t> src(static_cast<std::size_t>(s.n * hw), -1);
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t p = 0; p < hw; ++p) {
      const std::int32_t g = labels.values[n * hw + p];
      if (g == ignore_index) continue;
      if (g < 0 || g >= s.c) {
        throw std::out_of_range("label " + std::to_string(g) + " outside [0, " +
                                std::to_string(s.c) + ")");
      }
      const std::int64_t i = (n * s.c + g) * hw + p;
      const double lp = logp.data()[i];
      if (!(lp <= floor_logp)) {  // NaN takes this branch and propagates
        y[n * hw + p] = static_cast<T>(-lp);
        src[n * hw + p] = i;
      } else {
        y[n * hw + p] = static_cast<T>(-floor_logp);
      }
    }
  }
  detail::record(out, {logp.node()}, [ln = logp.node(), src = std::move(src)](const std::vector<double>& g) {
    ln->ensure_grad();
    for (std::size_t p = 0; p < src.size(); ++p) {
      if (src[p] >= 0) ln->grad[src[p]] -= g[p];
    }
  });
  return out;
}

template <typename T>
SelectedLoss<T> ohem_from(const PixelCrossEntropy<T>& ce, const LossConfig& cfg) {
  const auto v = ce.per_pixel.data();
  std::vector<double> losses(v.begin(), v.end());
  std::vector<std::int64_t> hard;
  for (std::int64_t i : ce.valid) {
    if (std::exp(-losses[i]) < cfg.ohem_prob_threshold) hard.push_back(i);
  }
  const std::size_t min_kept = ceil_fraction(ce.valid.size(), cfg.ohem_min_kept_fraction);
  if (hard.size() < min_kept) hard = top_k_by_loss(losses, ce.valid, min_kept);
  SelectedLoss<T> r;
  r.value = mean_at(ce.per_pixel, std::span<const std::int64_t>(hard));
  r.kept = std::move(hard);
  return r;
}

template <typename T>
SelectedLoss<T> hard_from(const PixelCrossEntropy<T>& ce, const BasicTensor<T>& d,
                          const LossConfig& cfg) {
  const Shape ps = ce.per_pixel.shape();
  if (d.shape() != ps) {
    throw std::invalid_argument("hard_pixel_loss: indicator " + d.shape().str() + " vs " + ps.str());
  }
  const auto v = ce.per_pixel.data();
  std::vector<double> losses(v.begin(), v.end());
  std::vector<std::int64_t> candidates;
  for (std::int64_t i : ce.valid) {
    if (static_cast<double>(d.data()[i]) > cfg.t_b) candidates.push_back(i);
  }
  const std::size_t k =
      std::min(candidates.size(), ceil_fraction(ce.valid.size(), cfg.hard_keep_fraction));
  SelectedLoss<T> r;
  r.kept = top_k_by_loss(losses, candidates, k);
  r.value = mean_at(ce.per_pixel, std::span<const std::int64_t>(r.kept));
  return r;
}

}  // namespace

template <typename T>
PixelCrossEntropy<T> cross_entropy_pixelwise(const BasicTensor<T>& logits,
                                             const LabelMap& labels,
                                             std::int32_t ignore_index) {
  check_label_shape(logits.shape(), labels, "cross_entropy_pixelwise");
  PixelCrossEntropy<T> r;
  r.per_pixel = nll_pick(log_softmax_channel(logits), labels, ignore_index);
  for (std::int64_t i = 0; i < labels.numel(); ++i) {
    if (labels.values[i] != ignore_index) r.valid.push_back(i);
  }
  r.mean = mean_at(r.per_pixel, std::span<const std::int64_t>(r.valid));
  return r;
}

std::vector<std::int64_t> top_k_by_loss(std::span<const double> losses,
                                        std::span<const std::int64_t> candidates,
                                        std::size_t k) {
  std::vector<std::int64_t> order(candidates.begin(), candidates.end());
  k = std::min(k, order.size());
  auto before = [&losses](std::int64_t a, std::int64_t b) {
    if (losses[a] != losses[b]) return losses[a] > losses[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    before);
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

template <typename T>
SelectedLoss<T> ohem_ce(const BasicTensor<T>& logits, const LabelMap& labels,
                        const LossConfig& cfg) {
  return ohem_from(cross_entropy_pixelwise(logits, labels, cfg.ignore_index), cfg);
}

template <typename T>
BasicTensor<T> bce(const BasicTensor<T>& d, const EdgeMap& b) {
  const Shape s = d.shape();
  if (s.c != 1 || b.n != s.n || b.h != s.h || b.w != s.w ||
      static_cast<std::int64_t>(b.values.size()) != s.numel()) {
    throw std::invalid_argument("bce: indicator " + s.str() + " does not match edge map");
  }
  const auto dv = d.data();
  const std::int64_t count = s.numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    const double p = std::clamp(static_cast<double>(dv[i]), kProbClamp, 1.0 - kProbClamp);
    acc -= b.values[i] ? std::log(p) : std::log(1.0 - p);
  }
  auto out = BasicTensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(count)));
  detail::record(out, {d.node()}, [dn = d.node(), bv = b.values, count](const std::vector<double>& g) {
    dn->ensure_grad();
    const double k = g[0] / static_cast<double>(count);
    for (std::int64_t i = 0; i < count; ++i) {
      const double p = dn->data[i];
      if (p < kProbClamp || p > 1.0 - kProbClamp) continue;
      dn->grad[i] += k * (bv[i] ? -1.0 / p : 1.0 / (1.0 - p));
    }
  });
  return out;
}

template <typename T>
SelectedLoss<T> hard_pixel_loss(const BasicTensor<T>& logits, const LabelMap& labels,
                                const BasicTensor<T>& d, const LossConfig& cfg) {
  return hard_from(cross_entropy_pixelwise(logits, labels, cfg.ignore_index), d, cfg);
}

template <typename T>
LossBreakdown<T> total_loss(const BasicTensor<T>& s_logits, const BasicTensor<T>& d,
                            const EdgeMap& b, const LabelMap& g, const LossConfig& cfg) {
  const auto ce = cross_entropy_pixelwise(s_logits, g, cfg.ignore_index);
  LossBreakdown<T> r;
  r.bce = bce(d, b);
  r.hard = hard_from(ce, d, cfg).value;
  r.ohem = ohem_from(ce, cfg).value;
  const std::array<BasicTensor<T>, 3> terms{r.bce, r.hard, r.ohem};
  const std::array<double, 3> coeffs{cfg.lambda, 1.0, 1.0};
  r.total = linear_combination<T>(terms, coeffs);
  return r;
}

#define BIALIGN_INSTANTIATE(T)                                                                  \
  template PixelCrossEntropy<T> cross_entropy_pixelwise(const BasicTensor<T>&, const LabelMap&, \
                                                        std::int32_t);                          \
  template SelectedLoss<T> ohem_ce(const BasicTensor<T>&, const LabelMap&, const LossConfig&);  \
  template BasicTensor<T> bce(const BasicTensor<T>&, const EdgeMap&);                           \
  template SelectedLoss<T> hard_pixel_loss(const BasicTensor<T>&, const LabelMap&,              \
                                           const BasicTensor<T>&, const LossConfig&);           \
  template LossBreakdown<T> total_loss(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                       const EdgeMap&, const LabelMap&, const LossConfig&);

BIALIGN_INSTANTIATE(float)
BIALIGN_INSTANTIATE(double)
#undef BIALIGN_INSTANTIATE

}  // namespace bialign
