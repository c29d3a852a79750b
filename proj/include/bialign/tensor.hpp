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
#ifndef BIALIGN_TENSOR_HPP_
#define BIALIGN_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bialign {

// Rank-4 extent in NCHW order.
struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  // Element count; throws std::length_error on negative extents or overflow.
  std::int64_t numel() const;
  std::int64_t plane() const { return h * w; }
  std::string str() const;

  bool operator==(const Shape&) const = default;
};

namespace detail {

// Type-independent part of an autodiff node. Gradients are always held in
// double precision regardless of the element type of the values.
struct NodeBase {
  Shape shape;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<double> grad;

  void ensure_grad() {
    if (grad.empty()) grad.assign(static_cast<std::size_t>(shape.numel()), 0.0);
  }
  virtual ~NodeBase() = default;
};

template <typename T>
struct Node final : NodeBase {
  std::vector<T> data;
};

}  // namespace detail

/// Dense NCHW tensor with an optional gradient slot.
///
/// A tensor is a cheap handle; copies share the underlying node. Values of
/// non-leaf tensors are never modified after creation. Leaves (parameters,
/// inputs) may be updated in place through mutable_data() between steps.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor();

  static BasicTensor zeros(const Shape& shape);
  static BasicTensor full(const Shape& shape, T value);
  /// Normal(0, stddev^2) samples from Rng(seed), drawn in row-major order.
  static BasicTensor randn(const Shape& shape, std::uint64_t seed, double stddev = 1.0);
  static BasicTensor from_data(const Shape& shape, std::vector<T> values);

  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->data.size()); }
  std::span<const T> data() const { return node_->data; }
  /// Writable view; only leaves may be written.
  std::span<T> mutable_data();

  std::int64_t offset(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    const Shape& s = node_->shape;
    return ((n * s.c + c) * s.h + h) * s.w + w;
  }
  T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return node_->data[static_cast<std::size_t>(offset(n, c, h, w))];
  }
  /// Value of a (1,1,1,1) tensor.
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  BasicTensor& set_requires_grad(bool on);
  bool is_leaf() const { return node_->is_leaf; }

  /// Accumulated gradient; zeros if nothing has flowed into this tensor.
  std::span<const double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  /// False if any value is NaN or infinite.
  bool all_finite() const;

  /// Leaf copy of the values, without gradient history.
  BasicTensor detach() const;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(node_->data.begin(), node_->data.end());
    auto t = BasicTensor<U>::from_data(node_->shape, std::move(out));
    t.set_requires_grad(node_->requires_grad && node_->is_leaf);
    return t;
  }

  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

 private:
  explicit BasicTensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node<T>> node_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Define-by-run record of differentiable operations.
///
/// Each thread owns one tape, reached through Tape::current(). Operations
/// record a backward closure whenever one of their inputs requires a
/// gradient and no NoGradGuard is active. backward() replays the closures in
/// reverse order exactly once; reset() drops the records (parameter values
/// and leaf gradients are untouched).
class Tape {
 public:
  using NodePtr = std::shared_ptr<detail::NodeBase>;

  static Tape& current();

  bool enabled() const { return no_grad_depth_ == 0; }
  void record(std::vector<NodePtr> inputs, NodePtr output, std::function<void()> backward);
  void backward(const NodePtr& loss);
  void reset();
  std::size_t size() const { return entries_.size(); }

 private:
  friend class NoGradGuard;

  struct Entry {
    std::vector<NodePtr> inputs;
    NodePtr output;
    std::function<void()> backward;
  };

  std::vector<Entry> entries_;
  bool consumed_ = false;
  int no_grad_depth_ = 0;
};

/// Disables recording on the current thread's tape while alive.
class NoGradGuard {
 public:
  NoGradGuard() { ++Tape::current().no_grad_depth_; }
  ~NoGradGuard() { --Tape::current().no_grad_depth_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

/// Backpropagates from a (1,1,1,1) loss through the current tape.
/// Throws std::logic_error when the tape is empty or was already replayed.
template <typename T>
void backward(const BasicTensor<T>& loss) {
  Tape::current().backward(loss.node());
}

namespace detail {

// Allocates an op output. Values are zero-initialised.
template <typename T>
BasicTensor<T> make_output(const Shape& shape) {
  return BasicTensor<T>::zeros(shape);
}

// Records `fn(grad_out)` for `out` if any input requires a gradient.
// `fn` receives the output gradient and must only accumulate into inputs
// whose requires_grad flag is set.
template <typename T, typename Fn>
void record(BasicTensor<T>& out, std::initializer_list<std::shared_ptr<NodeBase>> inputs, Fn fn) {
  Tape& tape = Tape::current();
  if (!tape.enabled()) return;
  bool any = false;
  for (const auto& in : inputs) any = any || (in && in->requires_grad);
  if (!any) return;
  auto* raw = out.node().get();
  raw->requires_grad = true;
  raw->is_leaf = false;
  std::vector<Tape::NodePtr> ins;
  for (const auto& in : inputs) {
    if (in) ins.push_back(in);
  }
  tape.record(std::move(ins), out.node(), [raw, fn = std::move(fn)]() { fn(raw->grad); });
}

}  // namespace detail

}  // namespace bialign

#endif  // BIALIGN_TENSOR_HPP_
