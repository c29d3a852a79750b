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
#include "bialign/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bialign {

namespace {

// Maps a flat index of `a` to the flat index of a broadcast operand `b`.
struct Broadcast {
  Shape a;
  Shape b;

  static Broadcast make(const Shape& a, const Shape& b, const char* op) {
    const bool ok = (b.n == a.n || b.n == 1) && (b.c == a.c || b.c == 1) && b.h == a.h &&
                    b.w == a.w;
    if (!ok) {
      throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.str() + " and " +
                                  b.str());
    }
    return {a, b};
  }

  std::int64_t operator()(std::int64_t i) const {
    const std::int64_t hw = a.h * a.w;
    const std::int64_t p = i % hw;
    const std::int64_t c = (i / hw) % a.c;
    const std::int64_t n = i / (hw * a.c);
    const std::int64_t bn = b.n == 1 ? 0 : n;
    const std::int64_t bc = b.c == 1 ? 0 : c;
    return (bn * b.c + bc) * hw + p;
  }
};

enum class BinaryKind { kAdd, kSub, kMul };

template <typename T>
BasicTensor<T> binary(const BasicTensor<T>& a, const BasicTensor<T>& b, BinaryKind kind,
                      const char* name) {
  const Broadcast bc = Broadcast::make(a.shape(), b.shape(), name);
  auto out = detail::make_output<T>(a.shape());
  auto y = out.mutable_data();
  const auto x = a.data();
  const auto z = b.data();
  const std::int64_t count = a.numel();
  for (std::int64_t i = 0; i < count; ++i) {
    const T u = x[i];
    const T v = z[bc(i)];
    switch (kind) {
      case BinaryKind::kAdd: y[i] = u + v; break;
      case BinaryKind::kSub: y[i] = u - v; break;
      case BinaryKind::kMul: y[i] = u * v; break;
    }
  }
  detail::record(out, {a.node(), b.node()},
                 [an = a.node(), bn = b.node(), bc, kind, count](const std::vector<double>& g) {
                   if (an->requires_grad) {
                     an->ensure_grad();
                     for (std::int64_t i = 0; i < count; ++i) {
                       const double d = kind == BinaryKind::kMul ? g[i] * bn->data[bc(i)] : g[i];
                       an->grad[i] += d;
                     }
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     for (std::int64_t i = 0; i < count; ++i) {
                       double d = g[i];
                       if (kind == BinaryKind::kSub) d = -d;
                       if (kind == BinaryKind::kMul) d *= an->data[i];
                       bn->grad[bc(i)] += d;
                     }
                   }
                 });
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(a, b, BinaryKind::kAdd, "add");
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(a, b, BinaryKind::kSub, "sub");
}

template <typename T>
BasicTensor<T> mul_elem(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(a, b, BinaryKind::kMul, "mul_elem");
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double k) {
  auto out = detail::make_output<T>(a.shape());
  auto y = out.mutable_data();
  const auto x = a.data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(x[i] * k);
  detail::record(out, {a.node()}, [an = a.node(), k](const std::vector<double>& g) {
    an->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i] * k;
  });
  return out;
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  double acc = 0.0;
  for (T v : a.data()) acc += v;
  auto out = BasicTensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc));
  detail::record(out, {a.node()}, [an = a.node()](const std::vector<double>& g) {
    an->ensure_grad();
    for (auto& v : an->grad) v += g[0];
  });
  return out;
}

template <typename T>
BasicTensor<T> weighted_sum(const BasicTensor<T>& a, std::span<const double> weights) {
  if (static_cast<std::int64_t>(weights.size()) != a.numel()) {
    throw std::invalid_argument("weighted_sum: weight count does not match " + a.shape().str());
  }
  double acc = 0.0;
  const auto x = a.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += weights[i] * x[i];
  auto out = BasicTensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc));
  detail::record(out, {a.node()},
                 [an = a.node(), w = std::vector<double>(weights.begin(), weights.end())](
                     const std::vector<double>& g) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < w.size(); ++i) an->grad[i] += g[0] * w[i];
                 });
  return out;
}

template <typename T>
BasicTensor<T> mean_at(const BasicTensor<T>& a, std::span<const std::int64_t> indices) {
  const auto x = a.data();
  double acc = 0.0;
  for (std::int64_t i : indices) {
    if (i < 0 || i >= a.numel()) throw std::out_of_range("mean_at: index out of range");
    acc += x[i];
  }
  const double k = indices.empty() ? 0.0 : 1.0 / static_cast<double>(indices.size());
  auto out = BasicTensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc * k));
  detail::record(out, {a.node()},
                 [an = a.node(), idx = std::vector<std::int64_t>(indices.begin(), indices.end()),
                  k](const std::vector<double>& g) {
                   an->ensure_grad();
                   for (std::int64_t i : idx) an->grad[i] += g[0] * k;
                 });
  return out;
}

template <typename T>
BasicTensor<T> linear_combination(std::span<const BasicTensor<T>> terms,
                                  std::span<const double> coeffs) {
  if (terms.size() != coeffs.size()) {
    throw std::invalid_argument("linear_combination: term/coefficient count mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].shape() != Shape{1, 1, 1, 1}) {
      throw std::invalid_argument("linear_combination: terms must be scalars");
    }
    acc += coeffs[i] * terms[i].item();
  }
  auto out = BasicTensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc));
  // Up to four scalar terms are used in practice; record them individually.
  Tape& tape = Tape::current();
  bool any = false;
  for (const auto& t : terms) any = any || t.requires_grad();
  if (tape.enabled() && any) {
    auto* raw = out.node().get();
    raw->requires_grad = true;
    raw->is_leaf = false;
    std::vector<Tape::NodePtr> ins;
    std::vector<std::shared_ptr<detail::Node<T>>> nodes;
    for (const auto& t : terms) {
      ins.push_back(t.node());
      nodes.push_back(t.node());
    }
    tape.record(std::move(ins), out.node(),
                [raw, nodes, k = std::vector<double>(coeffs.begin(), coeffs.end())]() {
                  for (std::size_t i = 0; i < nodes.size(); ++i) {
                    if (!nodes[i]->requires_grad) continue;
                    nodes[i]->ensure_grad();
                    nodes[i]->grad[0] += raw->grad[0] * k[i];
                  }
                });
  }
  return out;
}

template <typename T>
BasicTensor<T> flip_horizontal(const BasicTensor<T>& a) {
  const Shape s = a.shape();
  auto out = BasicTensor<T>::zeros(s);
  auto y = out.mutable_data();
  const auto x = a.data();
  for (std::int64_t r = 0; r < s.n * s.c * s.h; ++r) {
    for (std::int64_t j = 0; j < s.w; ++j) y[r * s.w + j] = x[r * s.w + (s.w - 1 - j)];
  }
  return out;
}

double finite_diff_check(const std::function<TensorD(const TensorD&)>& f, const TensorD& x,
                         double epsilon, double floor) {
  Tape& tape = Tape::current();
  tape.reset();
  TensorD probe = x.detach();
  probe.set_requires_grad(true);
  TensorD y = f(probe);
  if (y.shape() != Shape{1, 1, 1, 1}) {
    tape.reset();
    throw std::invalid_argument("finite_diff_check: f must return a scalar, got " +
                                y.shape().str());
  }
  if (!y.requires_grad()) {
    // f does not depend on x through recorded ops: analytic gradient is zero.
    tape.reset();
  } else {
    backward(y);
    tape.reset();
  }
  const std::vector<double> analytic(probe.grad().begin(), probe.grad().end());

  NoGradGuard guard;
  TensorD work = x.detach();
  auto values = work.mutable_data();
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double orig = values[i];
    const double hi = orig + epsilon;
    const double lo = orig - epsilon;
    values[i] = hi;
    const double f_hi = f(work).item();
    values[i] = lo;
    const double f_lo = f(work).item();
    values[i] = orig;
    const double numeric = (f_hi - f_lo) / (hi - lo);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

#define BIALIGN_INSTANTIATE(T)                                                                \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> mul_elem(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> scale(const BasicTensor<T>&, double);                               \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                         \
  template BasicTensor<T> weighted_sum(const BasicTensor<T>&, std::span<const double>);       \
  template BasicTensor<T> mean_at(const BasicTensor<T>&, std::span<const std::int64_t>);      \
  template BasicTensor<T> linear_combination(std::span<const BasicTensor<T>>,                 \
                                             std::span<const double>);                        \
  template BasicTensor<T> flip_horizontal(const BasicTensor<T>&);

BIALIGN_INSTANTIATE(float)
BIALIGN_INSTANTIATE(double)
#undef BIALIGN_INSTANTIATE

}  // namespace bialign
