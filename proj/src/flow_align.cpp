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
#include "bialign/flow_align.hpp"

#include <stdexcept>
#include <vector>

#include "bialign/nn.hpp"
#include "bialign/ops.hpp"
#include "bialign/resample.hpp"

namespace bialign {

template <typename T>
BasicFlowField<T>::BasicFlowField(BasicTensor<T> t) : t_(std::move(t)) {
  if (t_.shape().c != 2) {
    throw std::invalid_argument("flow field needs 2 channels, got " + t_.shape().str());
  }
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> match_resolution(const BasicTensor<T>& f_s,
                                                           const BasicTensor<T>& f_t) {
  const Shape s = f_s.shape(), t = f_t.shape();
  if (s.n != t.n) {
    throw std::invalid_argument("alignment: batch mismatch " + s.str() + " vs " + t.str());
  }
  const std::int64_t h = std::max(s.h, t.h);
  const std::int64_t w = std::max(s.w, t.w);
  auto up = [h, w](const BasicTensor<T>& f) {
    return (f.shape().h == h && f.shape().w == w) ? f : bilinear_resize(f, h, w, true);
  };
  return {up(f_s), up(f_t)};
}

template <typename T>
BasicFlowField<T> make_flow_field(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                                  const FlowConv<T>& conv) {
  auto [src, tgt] = match_resolution(f_s, f_t);
  return BasicFlowField<T>(conv2d(concat_channels(src, tgt), conv.weight, {conv.bias}, 1, 1));
}

template <typename T>
std::pair<BasicFlowField<T>, BasicTensor<T>> apply_gate(const BasicFlowField<T>& g,
                                                        const BasicTensor<T>& f_t,
                                                        const GateConv<T>& conv) {
  const Shape gs = g.shape(), ts = f_t.shape();
  if (gs.n != ts.n || gs.h != ts.h || gs.w != ts.w) {
    throw std::invalid_argument("apply_gate: flow " + gs.str() + " vs target " + ts.str());
  }
  BasicTensor<T> gate = sigmoid(conv2d(f_t, conv.weight, {conv.bias}, 1, 1));
  return {BasicFlowField<T>(mul_elem(g.tensor(), gate)), gate};
}

template <typename T>
BasicTensor<T> warp_bilinear(const BasicTensor<T>& f, const BasicFlowField<T>& flow) {
  const Shape s = f.shape();
  const Shape fs = flow.shape();
  if (fs.n != s.n || fs.h != s.h || fs.w != s.w) {
    throw std::invalid_argument("warp_bilinear: flow " + fs.str() + " vs feature " + s.str());
  }
  const std::int64_t hw = s.h * s.w;
  const auto fd = flow.tensor().data();
  // Sampling positions per (n, pixel); shared by all channels.
  std::vector<AxisSample> rows(static_cast<std::size_t>(s.n * hw));
  std::vector<AxisSample> cols(rows.size());
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t y = 0; y < s.h; ++y) {
      for (std::int64_t x = 0; x < s.w; ++x) {
        const std::int64_t p = y * s.w + x;
        const double dx = fd[(n * 2 + 0) * hw + p];
        const double dy = fd[(n * 2 + 1) * hw + p];
        cols[n * hw + p] = axis_sample(static_cast<double>(x) + dx, s.w);
        rows[n * hw + p] = axis_sample(static_cast<double>(y) + dy, s.h);
      }
    }
  }
  auto out = detail::make_output<T>(s);
  auto yv = out.mutable_data();
  const auto xd = f.data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* src = xd.data() + (n * s.c + c) * hw;
      T* dst = yv.data() + (n * s.c + c) * hw;
      for (std::int64_t p = 0; p < hw; ++p) dst[p] = bilerp<T>(src, s.w, rows[n * hw + p], cols[n * hw + p]);
    }
  }
  detail::record(
      out, {f.node(), flow.tensor().node()},
      [fn = f.node(), gn = flow.tensor().node(), s, hw, rows = std::move(rows),
       cols = std::move(cols)](const std::vector<double>& g) {
        if (fn->requires_grad) fn->ensure_grad();
        if (gn->requires_grad) gn->ensure_grad();
        for (std::int64_t n = 0; n < s.n; ++n) {
          for (std::int64_t c = 0; c < s.c; ++c) {
            const std::int64_t off = (n * s.c + c) * hw;
            const T* src = fn->data.data() + off;
            for (std::int64_t p = 0; p < hw; ++p) {
              const double gv = g[off + p];
              const AxisSample& r = rows[n * hw + p];
              const AxisSample& cl = cols[n * hw + p];
              if (fn->requires_grad) bilerp_scatter<T>(fn->grad.data() + off, s.w, r, cl, gv);
              if (!gn->requires_grad) continue;
              const double tx = static_cast<T>(cl.t);
              const double ty = static_cast<T>(r.t);
              const double f00 = src[r.i0 * s.w + cl.i0], f01 = src[r.i0 * s.w + cl.i1];
              const double f10 = src[r.i1 * s.w + cl.i0], f11 = src[r.i1 * s.w + cl.i1];
              if (cl.inside) {
                gn->grad[(n * 2 + 0) * hw + p] += gv * ((1.0 - ty) * (f01 - f00) + ty * (f11 - f10));
              }
              if (r.inside) {
                const double top = f00 + tx * (f01 - f00);
                const double bot = f10 + tx * (f11 - f10);
                gn->grad[(n * 2 + 1) * hw + p] += gv * (bot - top);
              }
            }
          }
        }
      });
  return out;
}

template <typename T>
AlignmentTrace<T> align_traced(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                               const AlignParams<T>& params, WarpMode mode) {
  auto [src, tgt] = match_resolution(f_s, f_t);
  BasicFlowField<T> flow(conv2d(concat_channels(src, tgt), params.flow.weight,
                                {params.flow.bias}, 1, 1));
  AlignmentTrace<T> trace;
  trace.flow = flow.tensor();
  if (params.gate) {
    auto [gated, gate] = apply_gate(flow, tgt, *params.gate);
    trace.gate = gate;
    trace.gated_flow = gated.tensor();
  } else {
    const Shape fs = flow.shape();
    trace.gate = BasicTensor<T>::full({fs.n, 1, fs.h, fs.w}, T{1});
    trace.gated_flow = flow.tensor();
  }
  const BasicTensor<T>& warped = mode == WarpMode::kWarpTarget ? tgt : src;
  trace.output = warp_bilinear(warped, BasicFlowField<T>(trace.gated_flow));
  return trace;
}

template <typename T>
BasicTensor<T> gfam(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                    const AlignParams<T>& params, WarpMode mode) {
  if (!params.gate) throw std::invalid_argument("gfam: gate parameters missing");
  return align_traced(f_s, f_t, params, mode).output;
}

template <typename T>
BasicTensor<T> fam(const BasicTensor<T>& f_s, const BasicTensor<T>& f_t,
                   const AlignParams<T>& params, WarpMode mode) {
  AlignParams<T> ungated{params.flow, std::nullopt};
  return align_traced(f_s, f_t, ungated, mode).output;
}

#define BIALIGN_INSTANTIATE(T)                                                                   \
  template class BasicFlowField<T>;                                                              \
  template std::pair<BasicTensor<T>, BasicTensor<T>> match_resolution(const BasicTensor<T>&,     \
                                                                      const BasicTensor<T>&);    \
  template BasicFlowField<T> make_flow_field(const BasicTensor<T>&, const BasicTensor<T>&,       \
                                             const FlowConv<T>&);                                \
  template std::pair<BasicFlowField<T>, BasicTensor<T>> apply_gate(                              \
      const BasicFlowField<T>&, const BasicTensor<T>&, const GateConv<T>&);                      \
  template BasicTensor<T> warp_bilinear(const BasicTensor<T>&, const BasicFlowField<T>&);        \
  template BasicTensor<T> gfam(const BasicTensor<T>&, const BasicTensor<T>&,                     \
                               const AlignParams<T>&, WarpMode);                                 \
  template BasicTensor<T> fam(const BasicTensor<T>&, const BasicTensor<T>&,                      \
                              const AlignParams<T>&, WarpMode);                                  \
  template AlignmentTrace<T> align_traced(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                          const AlignParams<T>&, WarpMode);

BIALIGN_INSTANTIATE(float)
BIALIGN_INSTANTIATE(double)
#undef BIALIGN_INSTANTIATE

}  // namespace bialign
