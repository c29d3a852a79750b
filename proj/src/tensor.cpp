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
#include "bialign/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bialign/rng.hpp"

namespace bialign {

namespace {

// Upper bound on elements per tensor (16 GiB of doubles).
constexpr std::int64_t kMaxElements = std::int64_t{1} << 31;

}  // namespace

std::int64_t Shape::numel() const {
  if (n < 0 || c < 0 || h < 0 || w < 0) {
    throw std::length_error("negative tensor extent " + str());
  }
  std::int64_t total = 1;
  for (std::int64_t d : {n, c, h, w}) {
    if (d != 0 && total > kMaxElements / d) {
      throw std::length_error("tensor size overflow " + str());
    }
    total *= d;
  }
  return total;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor() : node_(std::make_shared<detail::Node<T>>()) {}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(const Shape& shape) {
  return full(shape, T{0});
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(const Shape& shape, T value) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = shape;
  node->data.assign(static_cast<std::size_t>(shape.numel()), value);
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::randn(const Shape& shape, std::uint64_t seed, double stddev) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = shape;
  node->data.resize(static_cast<std::size_t>(shape.numel()));
  Rng rng(seed);
  for (auto& v : node->data) v = static_cast<T>(stddev * rng.normal());
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_data(const Shape& shape, std::vector<T> values) {
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw std::invalid_argument("from_data: " + std::to_string(values.size()) +
                                " values for shape " + shape.str());
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = shape;
  node->data = std::move(values);
  return BasicTensor(std::move(node));
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_data() {
  if (!node_->is_leaf) throw std::logic_error("mutable_data on a non-leaf tensor");
  return node_->data;
}

template <typename T>
T BasicTensor<T>::item() const {
  if (node_->data.size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + node_->shape.str());
  }
  return node_->data[0];
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::set_requires_grad(bool on) {
  if (!node_->is_leaf) throw std::logic_error("set_requires_grad on a non-leaf tensor");
  node_->requires_grad = on;
  return *this;
}

template <typename T>
std::span<const double> BasicTensor<T>::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(node_->data.begin(), node_->data.end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from_data(node_->shape, node_->data);
}

template class BasicTensor<float>;
template class BasicTensor<double>;

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(std::vector<NodePtr> inputs, NodePtr output, std::function<void()> backward) {
  entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const NodePtr& loss) {
  if (consumed_) throw std::logic_error("backward called twice without Tape::reset()");
  if (entries_.empty()) throw std::logic_error("backward on an empty tape");
  if (loss->shape != Shape{1, 1, 1, 1}) {
    throw std::invalid_argument("backward expects a (1,1,1,1) loss, got " + loss->shape.str());
  }
  consumed_ = true;
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // not reachable from the loss
    it->backward();
  }
  for (const auto& e : entries_) {
    for (const auto& in : e.inputs) {
      if (in->requires_grad && in->is_leaf) in->ensure_grad();
    }
  }
}

void Tape::reset() {
  entries_.clear();
  consumed_ = false;
}

}  // namespace bialign
