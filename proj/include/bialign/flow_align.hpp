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
#ifndef BIALIGN_FLOW_ALIGN_HPP_
#define BIALIGN_FLOW_ALIGN_HPP_

#include <optional>
#include <utility>

#include "bialign/tensor.hpp"

namespace bialign {

/// Per-pixel displacement (dx, dy) in pixels at the target resolution.
/// Channel 0 is horizontal, channel 1 vertical.
template <typename T>
class BasicFlowField {
 public:
  /// Throws std::invalid_argument unless `t` has exactly two channels.
  explicit BasicFlowField(BasicTensor<T> t);

  static BasicFlowField zeros(std::int64_t n, std::int64_t h, std::int64_t w) {
    return BasicFlowField(BasicTensor<T>::zeros({n, 2, h, w}));
  }

  const BasicTensor<T>& tensor() const { return t_; }
  const Shape& shape() const { return t_.shape(); }

 private:
  BasicTensor<T> t_;
};

using FlowField = BasicFlowField<float>;

/// Which feature the gated flow resamples. kWarpTarget follows the module
/// definition literally (the target is resampled at p + flow(p));
/// kWarpSource resamples the source feature instead.
enum class WarpMode { kWarpTarget, kWarpSource };

/// 3x3 convolution producing the flow from cat(source, target):
/// weight (2, c_s + c_t, 3, 3), bias (1, 2, 1, 1).
template <typename T>
struct FlowConv {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

/// 3x3 convolution producing the gate logit from the target:
/// weight (1, c_t, 3, 3), bias (1, 1, 1, 1).
template <typename T>
struct GateConv {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

/// Parameters of one alignment direction. Without a gate the module is the
/// plain (ungated) flow alignment.
template <typename T>
struct AlignParams {
  FlowConv<T> flow;
  std::optional<GateConv<T>> gate;
};

/// Intermediate values of one alignment, kept for visualisation.
template <typename T>
struct AlignmentTrace {
  BasicTensor<T> flow;        // G
  BasicTensor<T> gate;        // sigma(conv(F_t)), (n,1,h,w); all ones when ungated
  BasicTensor<T> gated_flow;  // G-hat
  BasicTensor<T> output;
};

/// Bilinearly upsamples whichever input is spatially smaller so both share
/// the larger extent. Returns (source, target).
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> match_resolution(const BasicTensor<T>& f_s,
                                                           const BasicTensor<T>& f_t);

template <typename T>
BasicFlowField<T> make_flow_field(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                                  const FlowConv<T>& conv);

/// Returns (gated flow, gate). The gate is broadcast over both flow channels.
template <typename T>
std::pair<BasicFlowField<T>, BasicTensor<T>> apply_gate(const BasicFlowField<T>& g,
                                                        const BasicTensor<T>& f_t,
                                                        const GateConv<T>& conv);

/// out(p) = bilinear sample of f at p + flow(p), with sample coordinates
/// clamped to the image border. Zero flow is the exact identity.
template <typename T>
BasicTensor<T> warp_bilinear(const BasicTensor<T>& f, const BasicFlowField<T>& flow);

/// Gated flow alignment. `params.gate` must be set.
template <typename T>
BasicTensor<T> gfam(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                    const AlignParams<T>& params, WarpMode mode = WarpMode::kWarpTarget);

/// Ungated flow alignment; any gate in `params` is ignored.
template <typename T>
BasicTensor<T> fam(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                   const AlignParams<T>& params, WarpMode mode = WarpMode::kWarpTarget);

/// gfam when `params.gate` is set, fam otherwise, with intermediates.
template <typename T>
AlignmentTrace<T> align_traced(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                               const AlignParams<T>& params, WarpMode mode);

}  // namespace bialign

#endif  // BIALIGN_FLOW_ALIGN_HPP_
