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
#ifndef BIALIGN_MODEL_HPP_
#define BIALIGN_MODEL_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bialign/flow_align.hpp"
#include "bialign/nn.hpp"
#include "bialign/tensor.hpp"

namespace bialign {

/// Which features are aligned before fusion.
enum class Alignment {
  kNone,               // plain concatenation of both paths
  kGfamCpToSp,         // context aligned into the spatial feature
  kGfamSpToCp,         // spatial aligned into the context feature
  kFamBidirectional,   // both directions, ungated
  kGfamBidirectional,  // both directions, gated
};

std::string_view to_string(Alignment a);
/// Throws std::invalid_argument for an unknown name.
Alignment alignment_from_string(std::string_view s);
std::string_view to_string(WarpMode m);
WarpMode warp_mode_from_string(std::string_view s);

struct ModelConfig {
  int num_classes = 5;
  std::array<int, 3> spatial_widths{16, 32, 64};
  int context_stem_width = 16;
  std::array<int, 4> context_stage_widths{16, 32, 64, 128};
  int blocks_per_stage = 1;
  std::vector<int> ppm_bins{1, 2, 3, 6};
  Alignment alignment = Alignment::kGfamBidirectional;
  bool spatial_loss_enabled = true;
  WarpMode warp_mode = WarpMode::kWarpTarget;

  void validate() const;

  bool aligns_cp_to_sp() const;
  bool aligns_sp_to_cp() const;
  bool gated() const;
  int spatial_channels() const { return spatial_widths[2]; }
  int context_channels() const { return context_stage_widths[3]; }
  int ppm_branch_channels() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Trainable parameters or buffers by dot-separated path; iteration order is
/// sorted by name.
template <typename T>
using BasicParameterSet = std::map<std::string, BasicTensor<T>>;
using ParameterSet = BasicParameterSet<float>;

template <typename T>
struct BasicModelState {
  BasicParameterSet<T> params;   // conv weights/biases, BN gamma/beta
  BasicParameterSet<T> buffers;  // BN running statistics

  template <typename U>
  BasicModelState<U> cast() const {
    BasicModelState<U> out;
    for (const auto& [k, v] : params) out.params.emplace(k, v.template cast<U>());
    for (const auto& [k, v] : buffers) out.buffers.emplace(k, v.template cast<U>());
    return out;
  }
  BasicModelState clone() const { return cast<T>(); }
};
using ModelState = BasicModelState<float>;

enum class InitRule { kHeNormal, kOnes, kZeros };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitRule init;
};

/// Trainable tensors of the configured network, in construction order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg);
/// BN running statistics (mean initialised to 0, variance to 1).
std::vector<ParamSpec> buffer_layout(const ModelConfig& cfg);
std::int64_t parameter_count(const ModelConfig& cfg);

/// True for tensors subject to weight decay (convolution weights).
bool applies_weight_decay(std::string_view name);

/// He-normal convolution weights (stddev sqrt(2 / fan_in)), BN gamma 1 and
/// beta 0, biases 0. Flow and gate convolutions start at exactly zero, so an
/// untrained aligned model reproduces the plain-concatenation model.
/// Each tensor draws from its own stream derive_seed(seed, name), which
/// makes shared tensors identical across configurations.
ModelState init_parameters(const ModelConfig& cfg, std::uint64_t seed);

template <typename T>
struct ModelOutput {
  BasicTensor<T> s_logits;  // (n, num_classes, h, w)
  BasicTensor<T> d;         // (n, 1, h, w), sigmoid indicator
  std::optional<AlignmentTrace<T>> cp_to_sp;
  std::optional<AlignmentTrace<T>> sp_to_cp;
};

template <typename T>
struct ContextOutput {
  BasicTensor<T> backbone;  // last residual stage, stride 32
  BasicTensor<T> output;    // after pyramid pooling, stride 32, context_channels()
};

/// Three stride-2 conv+BN+ReLU layers; requires h, w divisible by 8.
template <typename T>
BasicTensor<T> spatial_path_forward(const BasicTensor<T>& x, BasicModelState<T>& state,
                                    const ModelConfig& cfg, Mode mode);

/// Stem, four residual stages and pyramid pooling; requires h, w divisible
/// by 32.
template <typename T>
ContextOutput<T> context_path_forward(const BasicTensor<T>& x, BasicModelState<T>& state,
                                      const ModelConfig& cfg, Mode mode);

/// Full two-path network. Train mode uses batch statistics and updates the
/// BN running statistics in `state.buffers`.
template <typename T>
ModelOutput<T> bialignnet_forward(const BasicTensor<T>& x, BasicModelState<T>& state,
                                  const ModelConfig& cfg, Mode mode);

/// Analytic multiply-accumulate counts per module.
///
/// Conventions: convolution kh*kw*c_in*c_out*h_out*w_out; batch norm one
/// per element; bilinear resize and warp three per output element (three
/// lerps); average pooling one per input element per pyramid level; gating
/// one per flow element. Activations are free.
struct FlopsReport {
  std::map<std::string, std::int64_t> by_module;
  std::int64_t total() const;
};

FlopsReport count_flops(const ModelConfig& cfg, std::int64_t input_h, std::int64_t input_w);

}  // namespace bialign

#endif  // BIALIGN_MODEL_HPP_
