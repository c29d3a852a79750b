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
#ifndef BIALIGN_OPTIM_HPP_
#define BIALIGN_OPTIM_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>

#include "bialign/model.hpp"

namespace bialign {

/// Raised when a loss or gradient is not finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::int64_t total_iters = 300;
  std::int64_t batch_size = 8;
  double base_lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double poly_power = 0.9;
  std::uint64_t seed = 0;
  std::int64_t eval_every = 50;  // 0 disables periodic validation

  void validate() const;
};

/// base_lr * (1 - iter / total_iters)^poly_power. Throws std::out_of_range
/// outside [0, total_iters].
double poly_lr(std::int64_t iter, const TrainConfig& cfg);

/// One SGD step on a single tensor:
///   g' = grad + weight_decay * param
///   v  = momentum * v + g'
///   p  = p - lr * v
/// Arithmetic is in double; the stored values are rounded to float.
void sgd_momentum_step(std::span<float> param, std::span<const double> grad,
                       std::span<float> velocity, double lr, double momentum,
                       double weight_decay);

/// Velocity buffers keyed like the parameters, initialised to zero.
ParameterSet zero_velocity(const ModelState& state);

/// Applies sgd_momentum_step to every parameter; weight decay only on
/// tensors selected by applies_weight_decay. Throws NumericError, leaving
/// all parameters untouched, if any gradient is not finite.
void sgd_step(ModelState& state, ParameterSet& velocity, double lr, const TrainConfig& cfg);

}  // namespace bialign

#endif  // BIALIGN_OPTIM_HPP_
