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
#include "bialign/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bialign/resample.hpp"

namespace bialign {

std::int64_t conv_out_extent(std::int64_t in, std::int64_t k, int stride, int padding) {
  const std::int64_t span = in + 2 * padding - k;
  if (span < 0) return 0;
  return span / stride + 1;
}

namespace {

// Range of output columns [lo, hi) whose tap `k` lands inside [0, in).
struct TapRange {
  std::int64_t lo;
  std::int64_t hi;
};

TapRange tap_range(std::int64_t in, std::int64_t out, std::int64_t k, int stride, int padding) {
  const std::int64_t first = padding - k;  // need o * stride >= first
  const std::int64_t last = in - 1 + padding - k;  // need o * stride <= last
  if (last < 0) return {0, 0};
  const std::int64_t lo = first <= 0 ? 0 : (first + stride - 1) / stride;
  const std::int64_t hi = std::min(out, last / stride + 1);
  return {lo, std::max(lo, hi)};
}

// im2col view of one image for a convolution: row k = (ic * kh + ky) * kw +
// kx, column p = o_y * ow + o_x. Taps that land in the zero padding read 0.
struct Lowering {
  Shape xs;
  std::int64_t kh, kw;
  int stride, padding;
  std::int64_t oh, ow;

  std::int64_t rows() const { return xs.c * kh * kw; }
  std::int64_t cols() const { return oh * ow; }

  // Calls f(k, p, input offset) for every in-bounds tap, in (k, p) order.
  template <typename F>
  void for_each_tap(F&& f) const {
    for (std::int64_t ic = 0; ic < xs.c; ++ic) {
      for (std::int64_t ky = 0; ky < kh; ++ky) {
        for (std::int64_t kx = 0; kx < kw; ++kx) {
          const std::int64_t k = (ic * kh + ky) * kw + kx;
          const TapRange r = tap_range(xs.w, ow, kx, stride, padding);
          for (std::int64_t o_y = 0; o_y < oh; ++o_y) {
            const std::int64_t iy = o_y * stride - padding + ky;
            if (iy < 0 || iy >= xs.h) continue;
            const std::int64_t base = (ic * xs.h + iy) * xs.w - padding + kx;
            for (std::int64_t o_x = r.lo; o_x < r.hi; ++o_x) f(k, o_y * ow + o_x, base + o_x * stride);
          }
        }
      }
    }
  }

  template <typename T>
  void im2col(const T* x, T* col) const {
    std::fill(col, col + rows() * cols(), T{0});
    const std::int64_t p_n = cols();
    for_each_tap([&](std::int64_t k, std::int64_t p, std::int64_t i) { col[k * p_n + p] = x[i]; });
  }

  template <typename T>
  void im2col_transposed(const T* x, double* col_t) const {
    std::fill(col_t, col_t + rows() * cols(), 0.0);
    const std::int64_t k_n = rows();
    for_each_tap([&](std::int64_t k, std::int64_t p, std::int64_t i) { col_t[p * k_n + k] = x[i]; });
  }

  void col2im_add(const double* dcol, double* dx) const {
    const std::int64_t p_n = cols();
    for_each_tap([&](std::int64_t k, std::int64_t p, std::int64_t i) { dx[i] += dcol[k * p_n + p]; });
  }
};

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const std::optional<BasicTensor<T>>& bias, int stride, int padding) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.c != xs.c) {
    throw std::invalid_argument("conv2d: weight expects " + std::to_string(ws.c) +
                                " input channels, got " + std::to_string(xs.c));
  }
  if (ws.h % 2 == 0 || ws.w % 2 == 0) throw std::invalid_argument("conv2d: kernel must be odd");
  if (stride < 1 || padding < 0) throw std::invalid_argument("conv2d: bad stride/padding");
  if (bias && bias->shape() != Shape{1, ws.n, 1, 1}) {
    throw std::invalid_argument("conv2d: bias shape " + bias->shape().str());
  }
  const std::int64_t oh = conv_out_extent(xs.h, ws.h, stride, padding);
  const std::int64_t ow = conv_out_extent(xs.w, ws.w, stride, padding);
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: non-positive output size");

  const Lowering low{xs, ws.h, ws.w, stride, padding, oh, ow};
  const std::int64_t k_n = low.rows(), p_n = low.cols(), oc_n = ws.n;
  auto out = detail::make_output<T>({xs.n, oc_n, oh, ow});
  auto y = out.mutable_data();
  const T* wd = weight.data().data();

  // y[oc, p] = bias[oc] + sum_k w[oc, k] * col[k, p], k ascending in
  // (input channel, kernel row, kernel column) order.
  std::vector<T> col(static_cast<std::size_t>(k_n * p_n));
  for (std::int64_t n = 0; n < xs.n; ++n) {
    low.im2col(x.data().data() + n * xs.c * xs.h * xs.w, col.data());
    for (std::int64_t oc = 0; oc < oc_n; ++oc) {
      T* yp = y.data() + (n * oc_n + oc) * p_n;
      std::fill(yp, yp + p_n, bias ? bias->data()[oc] : T{0});
      for (std::int64_t k = 0; k < k_n; ++k) {
        const T wv = wd[oc * k_n + k];
        const T* cp = col.data() + k * p_n;
        for (std::int64_t p = 0; p < p_n; ++p) yp[p] += wv * cp[p];
      }
    }
  }

  std::shared_ptr<detail::Node<T>> bn = bias ? bias->node() : nullptr;
  detail::record(out, {x.node(), weight.node(), bn},
                 [xn = x.node(), wn = weight.node(), bn, low, oc_n](const std::vector<double>& g) {
    const Shape& xs = low.xs;
    const std::int64_t k_n = low.rows(), p_n = low.cols();
    const bool need_x = xn->requires_grad;
    const bool need_w = wn->requires_grad;
    if (bn && bn->requires_grad) {
      bn->ensure_grad();
      for (std::int64_t n = 0; n < xs.n; ++n) {
        for (std::int64_t oc = 0; oc < oc_n; ++oc) {
          const double* gp = g.data() + (n * oc_n + oc) * p_n;
          double acc = 0.0;
          for (std::int64_t p = 0; p < p_n; ++p) acc += gp[p];
          bn->grad[oc] += acc;
        }
      }
    }
    if (!need_x && !need_w) return;
    if (need_x) xn->ensure_grad();
    if (need_w) wn->ensure_grad();
    std::vector<double> col_t(need_w ? static_cast<std::size_t>(p_n * k_n) : 0);
    std::vector<double> dcol(need_x ? static_cast<std::size_t>(k_n * p_n) : 0);
    std::vector<double> wt;
    if (need_x) wt.assign(wn->data.begin(), wn->data.end());
    for (std::int64_t n = 0; n < xs.n; ++n) {
      const std::int64_t xoff = n * xs.c * xs.h * xs.w;
      const double* gn = g.data() + n * oc_n * p_n;
      if (need_w) {
        // dw[oc, :] += g[oc, p] * col[:, p], p ascending.
        low.im2col_transposed(xn->data.data() + xoff, col_t.data());
        for (std::int64_t oc = 0; oc < oc_n; ++oc) {
          double* dw = wn->grad.data() + oc * k_n;
          for (std::int64_t p = 0; p < p_n; ++p) {
            const double gv = gn[oc * p_n + p];
            if (gv == 0.0) continue;
            const double* cp = col_t.data() + p * k_n;
            for (std::int64_t k = 0; k < k_n; ++k) dw[k] += gv * cp[k];
          }
        }
      }
      if (need_x) {
        // dcol[k, :] = sum_oc w[oc, k] * g[oc, :], oc ascending.
        std::fill(dcol.begin(), dcol.end(), 0.0);
        for (std::int64_t oc = 0; oc < oc_n; ++oc) {
          const double* gp = gn + oc * p_n;
          for (std::int64_t k = 0; k < k_n; ++k) {
            const double wv = wt[oc * k_n + k];
            double* dp = dcol.data() + k * p_n;
            for (std::int64_t p = 0; p < p_n; ++p) dp[p] += wv * gp[p];
          }
        }
        low.col2im_add(dcol.data(), xn->grad.data() + xoff);
      }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> batchnorm2d(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                           const BasicTensor<T>& beta, BasicTensor<T>& running_mean,
                           BasicTensor<T>& running_var, Mode mode, double momentum,
                           double eps) {
  const Shape s = x.shape();
  const Shape cs{1, s.c, 1, 1};
  if (gamma.shape() != cs || beta.shape() != cs || running_mean.shape() != cs ||
      running_var.shape() != cs) {
    throw std::invalid_argument("batchnorm2d: per-channel parameters must be " + cs.str());
  }
  const std::int64_t hw = s.h * s.w;
  const std::int64_t m = s.n * hw;
  auto out = detail::make_output<T>(s);
  auto y = out.mutable_data();
  const auto xd = x.data();
  std::vector<double> mean(s.c), invstd(s.c);

  if (mode == Mode::kTrain) {
    if (m <= 1) {
      throw std::invalid_argument("batchnorm2d: train mode needs more than one value per channel");
    }
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (std::int64_t c = 0; c < s.c; ++c) {
      double acc = 0.0;
      for (std::int64_t n = 0; n < s.n; ++n) {
        const T* p = xd.data() + (n * s.c + c) * hw;
        for (std::int64_t i = 0; i < hw; ++i) acc += p[i];
      }
      const double mu = acc / static_cast<double>(m);
      double sq = 0.0;
      for (std::int64_t n = 0; n < s.n; ++n) {
        const T* p = xd.data() + (n * s.c + c) * hw;
        for (std::int64_t i = 0; i < hw; ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(m);
      mean[c] = mu;
      invstd[c] = 1.0 / std::sqrt(var + eps);
      rm[c] = static_cast<T>((1.0 - momentum) * rm[c] + momentum * mu);
      rv[c] = static_cast<T>((1.0 - momentum) * rv[c] +
                             momentum * var * static_cast<double>(m) / static_cast<double>(m - 1));
    }
  } else {
    for (std::int64_t c = 0; c < s.c; ++c) {
      mean[c] = running_mean.data()[c];
      invstd[c] = 1.0 / std::sqrt(static_cast<double>(running_var.data()[c]) + eps);
    }
  }

  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const double a = gamma.data()[c] * invstd[c];
      const double b = beta.data()[c];
      const std::int64_t off = (n * s.c + c) * hw;
      for (std::int64_t i = 0; i < hw; ++i) {
        y[off + i] = static_cast<T>(a * (xd[off + i] - mean[c]) + b);
      }
    }
  }

  detail::record(
      out, {x.node(), gamma.node(), beta.node()},
      [xn = x.node(), gn = gamma.node(), bn = beta.node(), s, hw, m, mean, invstd,
       train = mode == Mode::kTrain](const std::vector<double>& g) {
        if (xn->requires_grad) xn->ensure_grad();
        if (gn->requires_grad) gn->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for (std::int64_t c = 0; c < s.c; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::int64_t n = 0; n < s.n; ++n) {
            const std::int64_t off = (n * s.c + c) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
              const double xhat = (xn->data[off + i] - mean[c]) * invstd[c];
              sum_g += g[off + i];
              sum_gx += g[off + i] * xhat;
            }
          }
          if (gn->requires_grad) gn->grad[c] += sum_gx;
          if (bn->requires_grad) bn->grad[c] += sum_g;
          if (!xn->requires_grad) continue;
          const double scale = gn->data[c] * invstd[c];
          const double mg = train ? sum_g / static_cast<double>(m) : 0.0;
          const double mgx = train ? sum_gx / static_cast<double>(m) : 0.0;
          for (std::int64_t n = 0; n < s.n; ++n) {
            const std::int64_t off = (n * s.c + c) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
              const double xhat = (xn->data[off + i] - mean[c]) * invstd[c];
              xn->grad[off + i] += scale * (g[off + i] - mg - xhat * mgx);
            }
          }
        }
      });
  return out;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  auto out = detail::make_output<T>(x.shape());
  auto y = out.mutable_data();
  const auto xd = x.data();
  for (std::size_t i = 0; i < xd.size(); ++i) y[i] = xd[i] > T{0} ? xd[i] : T{0};
  detail::record(out, {x.node()}, [xn = x.node()](const std::vector<double>& g) {
    xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xn->data[i] > T{0}) xn->grad[i] += g[i];
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  auto out = detail::make_output<T>(x.shape());
  auto y = out.mutable_data();
  const auto xd = x.data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double v = xd[i];
    if (v >= 0) {
      y[i] = static_cast<T>(1.0 / (1.0 + std::exp(-v)));
    } else {
      const double e = std::exp(v);
      y[i] = static_cast<T>(e / (1.0 + e));
    }
  }
  detail::record(out, {x.node()}, [xn = x.node(), yn = out.node()](const std::vector<double>& g) {
    xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = yn->data[i];
      xn->grad[i] += g[i] * s * (1.0 - s);
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> bilinear_resize(const BasicTensor<T>& x, std::int64_t out_h, std::int64_t out_w,
                               bool align_corners) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("bilinear_resize: empty output");
  const Shape s = x.shape();
  const auto rows = resample_axis(s.h, out_h, align_corners);
  const auto cols = resample_axis(s.w, out_w, align_corners);
  const Shape os{s.n, s.c, out_h, out_w};
  auto out = detail::make_output<T>(os);
  auto y = out.mutable_data();
  const auto xd = x.data();
  for (std::int64_t p = 0; p < s.n * s.c; ++p) {
    const T* src = xd.data() + p * s.h * s.w;
    T* dst = y.data() + p * out_h * out_w;
    for (std::int64_t i = 0; i < out_h; ++i) {
      const auto& r = rows[i];
      for (std::int64_t j = 0; j < out_w; ++j) {
        const auto& c = cols[j];
        dst[i * out_w + j] = bilerp<T>(src, s.w, r, c);
      }
    }
  }
  detail::record(out, {x.node()},
                 [xn = x.node(), s, out_h, out_w, rows, cols](const std::vector<double>& g) {
                   xn->ensure_grad();
                   for (std::int64_t p = 0; p < s.n * s.c; ++p) {
                     double* dsrc = xn->grad.data() + p * s.h * s.w;
                     const double* gp = g.data() + p * out_h * out_w;
                     for (std::int64_t i = 0; i < out_h; ++i) {
                       for (std::int64_t j = 0; j < out_w; ++j) {
                         bilerp_scatter<T>(dsrc, s.w, rows[i], cols[j], gp[i * out_w + j]);
                       }
                     }
                   }
                 });
  return out;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape as = a.shape(), bs = b.shape();
  if (as.n != bs.n || as.h != bs.h || as.w != bs.w) {
    throw std::invalid_argument("concat_channels: mismatched " + as.str() + " and " + bs.str());
  }
  const std::int64_t hw = as.h * as.w;
  const Shape os{as.n, as.c + bs.c, as.h, as.w};
  auto out = detail::make_output<T>(os);
  auto y = out.mutable_data();
  for (std::int64_t n = 0; n < as.n; ++n) {
    std::copy_n(a.data().data() + n * as.c * hw, as.c * hw, y.data() + n * os.c * hw);
    std::copy_n(b.data().data() + n * bs.c * hw, bs.c * hw, y.data() + (n * os.c + as.c) * hw);
  }
  detail::record(out, {a.node(), b.node()},
                 [an = a.node(), bn = b.node(), as, bs, hw](const std::vector<double>& g) {
                   const std::int64_t oc = as.c + bs.c;
                   if (an->requires_grad) {
                     an->ensure_grad();
                     for (std::int64_t n = 0; n < as.n; ++n) {
                       for (std::int64_t i = 0; i < as.c * hw; ++i) {
                         an->grad[n * as.c * hw + i] += g[n * oc * hw + i];
                       }
                     }
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     for (std::int64_t n = 0; n < bs.n; ++n) {
                       for (std::int64_t i = 0; i < bs.c * hw; ++i) {
                         bn->grad[n * bs.c * hw + i] += g[(n * oc + as.c) * hw + i];
                       }
                     }
                   }
                 });
  return out;
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::int64_t begin, std::int64_t count) {
  const Shape s = x.shape();
  if (begin < 0 || count < 0 || begin + count > s.c) {
    throw std::out_of_range("slice_channels: range outside " + s.str());
  }
  const std::int64_t hw = s.h * s.w;
  const Shape os{s.n, count, s.h, s.w};
  auto out = detail::make_output<T>(os);
  auto y = out.mutable_data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    std::copy_n(x.data().data() + (n * s.c + begin) * hw, count * hw, y.data() + n * count * hw);
  }
  detail::record(out, {x.node()},
                 [xn = x.node(), s, hw, begin, count](const std::vector<double>& g) {
                   xn->ensure_grad();
                   for (std::int64_t n = 0; n < s.n; ++n) {
                     for (std::int64_t i = 0; i < count * hw; ++i) {
                       xn->grad[(n * s.c + begin) * hw + i] += g[n * count * hw + i];
                     }
                   }
                 });
  return out;
}

template <typename T>
BasicTensor<T> adaptive_avg_pool(const BasicTensor<T>& x, std::int64_t bins) {
  const Shape s = x.shape();
  if (bins < 1) throw std::invalid_argument("adaptive_avg_pool: bins must be positive");
  auto bounds = [bins](std::int64_t len) {
    std::vector<std::pair<std::int64_t, std::int64_t>> b(static_cast<std::size_t>(bins));
    for (std::int64_t i = 0; i < bins; ++i) {
      b[i] = {(i * len) / bins, ((i + 1) * len + bins - 1) / bins};
    }
    return b;
  };
  const auto rb = bounds(s.h);
  const auto cb = bounds(s.w);
  const Shape os{s.n, s.c, bins, bins};
  auto out = detail::make_output<T>(os);
  auto y = out.mutable_data();
  for (std::int64_t p = 0; p < s.n * s.c; ++p) {
    const T* src = x.data().data() + p * s.h * s.w;
    for (std::int64_t i = 0; i < bins; ++i) {
      for (std::int64_t j = 0; j < bins; ++j) {
        double acc = 0.0;
        for (std::int64_t r = rb[i].first; r < rb[i].second; ++r) {
          for (std::int64_t c = cb[j].first; c < cb[j].second; ++c) acc += src[r * s.w + c];
        }
        const double area = static_cast<double>((rb[i].second - rb[i].first) *
                                                (cb[j].second - cb[j].first));
        y[(p * bins + i) * bins + j] = static_cast<T>(acc / area);
      }
    }
  }
  detail::record(out, {x.node()}, [xn = x.node(), s, bins, rb, cb](const std::vector<double>& g) {
    xn->ensure_grad();
    for (std::int64_t p = 0; p < s.n * s.c; ++p) {
      double* dst = xn->grad.data() + p * s.h * s.w;
      for (std::int64_t i = 0; i < bins; ++i) {
        for (std::int64_t j = 0; j < bins; ++j) {
          const double area = static_cast<double>((rb[i].second - rb[i].first) *
                                                  (cb[j].second - cb[j].first));
          const double v = g[(p * bins + i) * bins + j] / area;
          for (std::int64_t r = rb[i].first; r < rb[i].second; ++r) {
            for (std::int64_t c = cb[j].first; c < cb[j].second; ++c) dst[r * s.w + c] += v;
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> log_softmax_channel(const BasicTensor<T>& x) {
  const Shape s = x.shape();
  if (s.c < 2) throw std::invalid_argument("log_softmax_channel: needs at least 2 channels");
  const std::int64_t hw = s.h * s.w;
  auto out = detail::make_output<T>(s);
  auto y = out.mutable_data();
  const auto xd = x.data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t p = 0; p < hw; ++p) {
      const std::int64_t base = n * s.c * hw + p;
      double mx = xd[base];
      for (std::int64_t c = 1; c < s.c; ++c) mx = std::max(mx, static_cast<double>(xd[base + c * hw]));
      double acc = 0.0;
      for (std::int64_t c = 0; c < s.c; ++c) acc += std::exp(xd[base + c * hw] - mx);
      const double lse = mx + std::log(acc);
      for (std::int64_t c = 0; c < s.c; ++c) y[base + c * hw] = static_cast<T>(xd[base + c * hw] - lse);
    }
  }
  detail::record(out, {x.node()}, [xn = x.node(), yn = out.node(), s, hw](const std::vector<double>& g) {
    xn->ensure_grad();
    for (std::int64_t n = 0; n < s.n; ++n) {
      for (std::int64_t p = 0; p < hw; ++p) {
        const std::int64_t base = n * s.c * hw + p;
        double gsum = 0.0;
        for (std::int64_t c = 0; c < s.c; ++c) gsum += g[base + c * hw];
        for (std::int64_t c = 0; c < s.c; ++c) {
          const std::int64_t i = base + c * hw;
          xn->grad[i] += g[i] - std::exp(static_cast<double>(yn->data[i])) * gsum;
        }
      }
    }
  });
  return out;
}

#define BIALIGN_INSTANTIATE(T)                                                                    \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                 const std::optional<BasicTensor<T>>&, int, int);                 \
  template BasicTensor<T> batchnorm2d(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                      const BasicTensor<T>&, BasicTensor<T>&, BasicTensor<T>&,    \
                                      Mode, double, double);                                      \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                            \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                         \
  template BasicTensor<T> bilinear_resize(const BasicTensor<T>&, std::int64_t, std::int64_t, bool); \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> slice_channels(const BasicTensor<T>&, std::int64_t, std::int64_t);      \
  template BasicTensor<T> adaptive_avg_pool(const BasicTensor<T>&, std::int64_t);                 \
  template BasicTensor<T> log_softmax_channel(const BasicTensor<T>&);

BIALIGN_INSTANTIATE(float)
BIALIGN_INSTANTIATE(double)
#undef BIALIGN_INSTANTIATE

}  // namespace bialign
