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
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "bialign/nn.hpp"
#include "bialign/ops.hpp"

namespace bialign {
namespace {

// Direct six-loop convolution used as the reference.
std::vector<double> naive_conv(const TensorD& x, const TensorD& w, const TensorD* b, int stride,
                               int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  const auto oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const auto ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  std::vector<double> y;
  for (std::int64_t n = 0; n < xs.n; ++n)
    for (std::int64_t o = 0; o < ws.n; ++o)
      for (std::int64_t i = 0; i < oh; ++i)
        for (std::int64_t j = 0; j < ow; ++j) {
          double acc = b ? b->at(0, o, 0, 0) : 0.0;
          for (std::int64_t c = 0; c < xs.c; ++c)
            for (std::int64_t ky = 0; ky < ws.h; ++ky)
              for (std::int64_t kx = 0; kx < ws.w; ++kx) {
                const auto yy = i * stride - pad + ky, xx = j * stride - pad + kx;
                if (yy < 0 || xx < 0 || yy >= xs.h || xx >= xs.w) continue;
                acc += x.at(n, c, yy, xx) * w.at(o, c, ky, kx);
              }
          y.push_back(acc);
        }
  return y;
}

TEST(Conv2dTest, AllOnesCenterAndCorner) {
  const auto x = Tensor::full({1, 1, 3, 3}, 1.0f);
  const auto w = Tensor::full({1, 1, 3, 3}, 1.0f);
  const auto y = conv2d(x, w, std::optional<Tensor>(), 1, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  EXPECT_EQ(y.at(0, 0, 1, 1), 9.0f);
  EXPECT_EQ(y.at(0, 0, 0, 0), 4.0f);
  EXPECT_EQ(y.at(0, 0, 0, 1), 6.0f);
}

TEST(Conv2dTest, StrideTwoOutputSize) {
  const auto y = conv2d(Tensor::zeros({1, 2, 8, 8}), Tensor::zeros({3, 2, 3, 3}), std::optional<Tensor>(), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 3, 4, 4}));
  EXPECT_EQ(conv_out_extent(7, 3, 2, 1), 4);
}

TEST(Conv2dTest, MatchesDirectConvolution) {
  for (int stride : {1, 2}) {
    for (int k : {1, 3, 5}) {
      const auto x = TensorD::randn({2, 3, 9, 7}, 1 + k);
      const auto w = TensorD::randn({4, 3, k, k}, 2 + k);
      const auto b = TensorD::randn({1, 4, 1, 1}, 3 + k);
      const auto y = conv2d(x, w, std::optional<TensorD>(b), stride, k / 2);
      const auto ref = naive_conv(x, w, &b, stride, k / 2);
      ASSERT_EQ(static_cast<std::size_t>(y.numel()), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.data()[i], ref[i], 1e-12);
    }
  }
}

TEST(Conv2dTest, RejectsBadArguments) {
  const auto x = Tensor::zeros({1, 2, 8, 8});
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 3, 3, 3}), std::optional<Tensor>(), 1, 1), std::invalid_argument);
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 2, 2}), std::optional<Tensor>(), 1, 1), std::invalid_argument);
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 3, 3}), std::optional<Tensor>(Tensor::zeros({1, 2, 1, 1})), 1, 1),
               std::invalid_argument);
}

TEST(Conv2dTest, TranslationEquivariantInInterior) {
  const auto x = Tensor::randn({1, 2, 12, 12}, 5);
  const auto w = Tensor::randn({2, 2, 3, 3}, 6);
  // Shift the input right by one column.
  std::vector<float> shifted(x.data().begin(), x.data().end());
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 12; ++y)
      for (int xx = 11; xx >= 1; --xx) shifted[(c * 12 + y) * 12 + xx] = x.at(0, c, y, xx - 1);
  const auto ya = conv2d(x, w, std::optional<Tensor>(), 1, 1);
  const auto yb = conv2d(Tensor::from_data(x.shape(), shifted), w, std::optional<Tensor>(), 1, 1);
  for (int c = 0; c < 2; ++c)
    for (int y = 1; y < 11; ++y)
      for (int xx = 2; xx < 11; ++xx) EXPECT_EQ(yb.at(0, c, y, xx), ya.at(0, c, y, xx - 1));
}

TEST(BatchNormTest, TrainNormalisesAndUpdatesRunningStats) {
  const auto x = TensorD::from_data({2, 1, 1, 2}, {1.0, 3.0, 5.0, 7.0});
  auto gamma = TensorD::full({1, 1, 1, 1}, 2.0);
  auto beta = TensorD::full({1, 1, 1, 1}, 0.5);
  auto rm = TensorD::zeros({1, 1, 1, 1});
  auto rv = TensorD::full({1, 1, 1, 1}, 1.0);
  const auto y = batchnorm2d(x, gamma, beta, rm, rv, Mode::kTrain, 0.1, 0.0);
  // mean 4, biased variance 5, unbiased 20/3.
  const double s = std::sqrt(5.0);
  const std::vector<double> want{2 * -3 / s + 0.5, 2 * -1 / s + 0.5, 2 * 1 / s + 0.5,
                                 2 * 3 / s + 0.5};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(y.data()[i], want[i], 1e-12);
  EXPECT_NEAR(rm.item(), 0.4, 1e-12);
  EXPECT_NEAR(rv.item(), 0.9 + 0.1 * 20.0 / 3.0, 1e-12);
}

TEST(BatchNormTest, EvalUsesRunningStats) {
  const auto x = TensorD::from_data({1, 1, 1, 2}, {1.0, 2.0});
  auto gamma = TensorD::full({1, 1, 1, 1}, 1.0);
  auto beta = TensorD::zeros({1, 1, 1, 1});
  auto rm = TensorD::full({1, 1, 1, 1}, 1.0);
  auto rv = TensorD::full({1, 1, 1, 1}, 4.0);
  const auto y = batchnorm2d(x, gamma, beta, rm, rv, Mode::kEval, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(y.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(y.data()[1], 0.5);
  EXPECT_DOUBLE_EQ(rm.item(), 1.0);
}

TEST(ActivationTest, ReluAndSigmoid) {
  const auto x = Tensor::from_data({1, 1, 1, 3}, {-1.0f, 0.0f, 2.0f});
  const auto r = relu(x);
  EXPECT_EQ(r.data()[0], 0.0f);
  EXPECT_EQ(r.data()[2], 2.0f);
  const auto s = sigmoid(x);
  EXPECT_FLOAT_EQ(s.data()[1], 0.5f);
  EXPECT_FLOAT_EQ(s.data()[2], static_cast<float>(1.0 / (1.0 + std::exp(-2.0))));
}

TEST(ResizeTest, SameSizeIsIdentity) {
  const auto x = Tensor::randn({1, 2, 5, 6}, 1);
  const auto y = bilinear_resize(x, 5, 6);
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
}

TEST(ResizeTest, AlignCornersUpsample) {
  const auto x = TensorD::from_data({1, 1, 2, 2}, {0.0, 1.0, 2.0, 3.0});
  const auto y = bilinear_resize(x, 3, 3);
  const std::vector<double> want{0.0, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 3.0};
  for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(y.data()[i], want[i]);
}

TEST(ResizeTest, HalfPixelMode) {
  // src = (dst + 0.5) * 2 / 4 - 0.5 -> {0, 0.25, 0.75, 1} after clamping.
  const auto x = TensorD::from_data({1, 1, 1, 2}, {0.0, 4.0});
  const auto y = bilinear_resize(x, 1, 4, false);
  const std::vector<double> want{0.0, 1.0, 3.0, 4.0};
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y.data()[i], want[i]);
}

TEST(PoolTest, AdaptiveAvgPoolCells) {
  // 5 columns into 2 bins: [0,3) and [2,5).
  // 2 rows into 2 bins: one row each.
  const auto x = TensorD::from_data({1, 1, 2, 5}, {1, 2, 3, 4, 5, 10, 20, 30, 40, 50});
  const auto y = adaptive_avg_pool(x, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 1), 4.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 1, 0), 20.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 1, 1), 40.0);
  // More bins than pixels: 2 columns into 3 cells [0,1), [0,2), [1,2).
  const auto over = adaptive_avg_pool(TensorD::from_data({1, 1, 1, 2}, {2.0, 6.0}), 3);
  EXPECT_DOUBLE_EQ(over.at(0, 0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(over.at(0, 0, 0, 1), 4.0);
  EXPECT_DOUBLE_EQ(over.at(0, 0, 2, 2), 6.0);
  EXPECT_THROW(adaptive_avg_pool(TensorD::zeros({1, 1, 1, 5}), 0), std::invalid_argument);
  const auto g = adaptive_avg_pool(TensorD::randn({2, 3, 6, 6}, 2), 1);
  EXPECT_EQ(g.shape(), (Shape{2, 3, 1, 1}));
}

TEST(LogSoftmaxTest, ExponentialsSumToOne) {
  const auto x = TensorD::randn({2, 4, 3, 3}, 8, 10.0);
  const auto y = log_softmax_channel(x);
  for (int n = 0; n < 2; ++n)
    for (int p = 0; p < 9; ++p) {
      double s = 0.0;
      for (int c = 0; c < 4; ++c) s += std::exp(y.at(n, c, p / 3, p % 3));
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  // Large logits stay finite.
  const auto big = log_softmax_channel(Tensor::from_data({1, 2, 1, 1}, {1000.0f, 0.0f}));
  EXPECT_TRUE(big.all_finite());
  EXPECT_EQ(big.data()[0], 0.0f);
}

TEST(ChannelTest, ConcatThenSliceRoundTrips) {
  const auto a = Tensor::randn({2, 2, 3, 3}, 1);
  const auto b = Tensor::randn({2, 3, 3, 3}, 2);
  const auto c = concat_channels(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 5, 3, 3}));
  const auto sb = slice_channels(c, 2, 3);
  EXPECT_TRUE(std::equal(b.data().begin(), b.data().end(), sb.data().begin()));
  EXPECT_THROW(slice_channels(c, 4, 2), std::out_of_range);
  EXPECT_THROW(concat_channels(a, Tensor::zeros({2, 1, 4, 3})), std::invalid_argument);
}

}  // namespace
}  // namespace bialign
