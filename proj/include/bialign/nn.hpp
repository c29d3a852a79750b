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
#ifndef BIALIGN_NN_HPP_
#define BIALIGN_NN_HPP_

#include <cstdint>
#include <optional>

#include "bialign/tensor.hpp"

namespace bialign {

enum class Mode { kTrain, kEval };

/// 2-D cross-correlation with zero padding.
///
/// weight is (out_c, in_c, kh, kw) with odd kernel extents, bias is
/// (1, out_c, 1, 1) or absent. Output extent is
/// floor((in + 2*padding - k) / stride) + 1. Accumulation order is fixed
/// (input channel, kernel row, kernel column) for bitwise reproducibility.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const std::optional<BasicTensor<T>>& bias, int stride, int padding);

/// Per-channel batch normalisation. gamma, beta and the running statistics
/// are (1, C, 1, 1). Train mode normalises with the biased batch variance
/// over (n, h, w) and blends the running statistics with
/// running = (1 - momentum) * running + momentum * batch (unbiased variance);
/// eval mode applies the running statistics as a fixed affine map.
template <typename T>
BasicTensor<T> batchnorm2d(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                           const BasicTensor<T>& beta, BasicTensor<T>& running_mean,
                           BasicTensor<T>& running_var, Mode mode, double momentum = 0.1,
                           double eps = 1e-5);

/// max(0, x); the derivative at exactly 0 is taken as 0.
template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);

/// Bilinear resampling to (out_h, out_w).
///
/// With align_corners the corner pixels of input and output coincide:
/// src = dst * (in - 1) / (out - 1). Otherwise pixel centres are aligned:
/// src = (dst + 0.5) * in / out - 0.5, clamped to the image. The library
/// uses align_corners = true throughout, which makes same-size resizing an
/// exact identity.
template <typename T>
BasicTensor<T> bilinear_resize(const BasicTensor<T>& x, std::int64_t out_h, std::int64_t out_w,
                               bool align_corners = true);

/// Stacks channels of `a` then `b`; n, h, w must agree.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Channels [begin, begin + count).
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::int64_t begin, std::int64_t count);

/// Adaptive average pooling to a bins x bins grid. Cell i along an axis of
/// length L covers [floor(i*L/bins), ceil((i+1)*L/bins)). The cells are
/// never empty; with bins > L neighbouring cells repeat input pixels.
template <typename T>
BasicTensor<T> adaptive_avg_pool(const BasicTensor<T>& x, std::int64_t bins);

/// Log-softmax over the channel axis at each pixel, with max subtraction.
template <typename T>
BasicTensor<T> log_softmax_channel(const BasicTensor<T>& x);

/// Output spatial extent of conv2d along one axis.
std::int64_t conv_out_extent(std::int64_t in, std::int64_t k, int stride, int padding);

}  // namespace bialign

#endif  // BIALIGN_NN_HPP_
