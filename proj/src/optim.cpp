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
#include "bialign/optim.hpp"

#include <cmath>
#include <string>

namespace bialign {

void TrainConfig::validate() const {
  if (total_iters < 1) throw std::invalid_argument("total_iters must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be > 0");
  if (!(base_lr > 0.0)) throw std::invalid_argument("base_lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(poly_power > 0.0)) throw std::invalid_argument("poly_power must be > 0");
  if (eval_every < 0) throw std::invalid_argument("eval_every must be >= 0");
}

double poly_lr(std::int64_t iter, const TrainConfig& cfg) {
  if (iter < 0 || iter > cfg.total_iters) {
    throw std::out_of_range("poly_lr: iteration " + std::to_string(iter) + " outside [0, " +
                            std::to_string(cfg.total_iters) + "]");
  }
  const double progress = static_cast<double>(iter) / static_cast<double>(cfg.total_iters);
  return cfg.base_lr * std::pow(1.0 - progress, cfg.poly_power);
}

void sgd_momentum_step(std::span<float> param, std::span<const double> grad,
                       std::span<float> velocity, double lr, double momentum,
                       double weight_decay) {
  if (grad.size() != param.size() || velocity.size() != param.size()) {
    throw std::invalid_argument("sgd_momentum_step: size mismatch");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i] + weight_decay * param[i];
    const double v = momentum * velocity[i] + g;
    velocity[i] = static_cast<float>(v);
    param[i] = static_cast<float>(param[i] - lr * v);
  }
}

ParameterSet zero_velocity(const ModelState& state) {
  ParameterSet v;
  for (const auto& [name, p] : state.params) v.emplace(name, Tensor::zeros(p.shape()));
  return v;
}

void sgd_step(ModelState& state, ParameterSet& velocity, double lr, const TrainConfig& cfg) {
  for (const auto& [name, p] : state.params) {
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + name);
    }
  }
  for (auto& [name, p] : state.params) {
    auto v = velocity.find(name);
    if (v == velocity.end()) throw std::invalid_argument("no velocity buffer for " + name);
    const double decay = applies_weight_decay(name) ? cfg.weight_decay : 0.0;
    sgd_momentum_step(p.mutable_data(), p.grad(), v->second.mutable_data(), lr, cfg.momentum, decay);
  }
}

}  // namespace bialign
