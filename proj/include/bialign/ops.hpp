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
#ifndef BIALIGN_OPS_HPP_
#define BIALIGN_OPS_HPP_

#include <cstdint>
#include <functional>
#include <span>

#include "bialign/tensor.hpp"

namespace bialign {

// Elementwise arithmetic. `b` may broadcast over the batch (b.n == 1) and/or
// over channels (b.c == 1); every other extent must match `a`.
template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul_elem(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double k);

/// Sum of all elements as a (1,1,1,1) tensor. Accumulates in double.
template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);

/// Sum of w_i * a_i over all elements, with constant weights `w`.
template <typename T>
BasicTensor<T> weighted_sum(const BasicTensor<T>& a, std::span<const double> weights);

/// Mean over the listed flat indices; 0 with no gradient for an empty list.
template <typename T>
BasicTensor<T> mean_at(const BasicTensor<T>& a, std::span<const std::int64_t> indices);

/// Weighted sum of scalar tensors: sum_i k_i * t_i.
template <typename T>
BasicTensor<T> linear_combination(std::span<const BasicTensor<T>> terms,
                                  std::span<const double> coeffs);

/// Non-differentiable horizontal mirror.
template <typename T>
BasicTensor<T> flip_horizontal(const BasicTensor<T>& a);

/// Max relative error between the tape gradient of `f` at `x` and central
/// differences with step `epsilon`.
///
/// Error per coordinate is |analytic - numeric| / max(|analytic|, |numeric|,
/// floor); the maximum over all coordinates of `x` is returned. The floor
/// keeps derivatives far below the central-difference resolution (roundoff
/// of about |f| * 1e-16 / epsilon) from being compared relatively. `f` must be
/// deterministic and return a (1,1,1,1) tensor; std::invalid_argument
/// otherwise. The numeric quotient divides by the exact perturbation
/// (x+e) - (x-e) as represented rather than by 2 * epsilon.
double finite_diff_check(const std::function<TensorD(const TensorD&)>& f, const TensorD& x,
                         double epsilon, double floor = 1e-6);

}  // namespace bialign

#endif  // BIALIGN_OPS_HPP_
