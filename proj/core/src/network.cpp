/* Copyright 2026 The latdis Authors. All Rights Reserved.

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

#include "latdis/network.hpp"

#include <algorithm>
#include <string>

namespace latdis {

Network::Network(Shape input_shape) {
  if (input_shape.empty() || numel(input_shape) == 0) {
    throw ShapeError("network input shape must be non-empty");
  }
  shapes_.push_back(std::move(input_shape));
  param_offset_.push_back(0);
}

Network::Network(const Network& other)
    : shapes_(other.shapes_), param_offset_(other.param_offset_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Network& Network::append(std::unique_ptr<Layer> layer) {
  if (shapes_.empty()) throw ShapeError("network has no input shape");
  Shape out;
  try {
    out = layer->output_shape(shapes_.back());
  } catch (const ShapeError& e) {
    throw ShapeError("layer " + std::to_string(layers_.size()) + " (" + layer->describe() +
                     "): " + e.what());
  }
  param_offset_.push_back(param_offset_.back() + layer->parameters().size());
  shapes_.push_back(std::move(out));
  layers_.push_back(std::move(layer));
  return *this;
}

const Shape& Network::shape_at(std::size_t tap) const {
  check_tap(tap);
  return shapes_[tap];
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> ps;
  for (auto& l : layers_) {
    for (Tensor& p : l->parameters()) ps.push_back(&p);
  }
  return ps;
}

std::vector<const Tensor*> Network::parameters() const {
  std::vector<const Tensor*> ps;
  for (const auto& l : layers_) {
    for (const Tensor& p : std::as_const(*l).parameters()) ps.push_back(&p);
  }
  return ps;
}

std::vector<Tensor> Network::zero_gradients() const {
  std::vector<Tensor> gs;
  for (const Tensor* p : parameters()) gs.emplace_back(p->shape());
  return gs;
}

Network Network::prefix(std::size_t tap) const {
  check_tap(tap);
  Network n(shapes_.front());
  for (std::size_t i = 0; i < tap; ++i) n.append(layers_[i]->clone());
  return n;
}

Network Network::suffix(std::size_t tap) const {
  check_tap(tap);
  Network n(shapes_[tap]);
  for (std::size_t i = tap; i < layers_.size(); ++i) n.append(layers_[i]->clone());
  return n;
}

void Network::check_tap(std::size_t tap) const {
  if (tap > layers_.size()) {
    throw ShapeError("tap " + std::to_string(tap) + " out of range [0, " +
                     std::to_string(layers_.size()) + "]");
  }
}

void Network::check_batch(const Tensor& batch, const char* what) const {
  const Shape& s = batch.shape();
  if (s.size() != shapes_.front().size() + 1 ||
      !std::equal(s.begin() + 1, s.end(), shapes_.front().begin())) {
    throw ShapeError(std::string(what) + ": batch shape " + shape_str(s) +
                     " does not match network input " + shape_str(shapes_.front()));
  }
}

Tensor Network::forward_batch(const Tensor& batch, std::size_t tap) const {
  check_tap(tap);
  check_batch(batch, "forward");
  if (tap == 0) return batch;
  Tensor x = layers_[0]->forward(batch);
  for (std::size_t i = 1; i < tap; ++i) x = layers_[i]->forward(x);
  return x;
}

std::vector<Tensor> Network::trace(const Tensor& batch, std::size_t tap) const {
  check_tap(tap);
  check_batch(batch, "trace");
  std::vector<Tensor> acts;
  acts.reserve(tap + 1);
  acts.push_back(batch);
  for (std::size_t i = 0; i < tap; ++i) acts.push_back(layers_[i]->forward(acts.back()));
  return acts;
}

Tensor Network::backward(const std::vector<Tensor>& trace, const Tensor& grad_out,
                         std::vector<Tensor>* param_grads, bool need_input_grad) const {
  const std::size_t tap = trace.size() - 1;
  check_tap(tap);
  if (grad_out.shape() != trace.back().shape()) {
    throw ShapeError("backward: cotangent shape " + shape_str(grad_out.shape()) +
                     " does not match tap output " + shape_str(trace.back().shape()));
  }
  if (param_grads && param_grads->size() != param_offset_.back()) {
    throw ShapeError("backward: gradient set does not match network parameters");
  }
  Tensor g = grad_out;
  for (std::size_t i = tap; i-- > 0;) {
    std::span<Tensor> slot;
    if (param_grads) {
      slot = std::span<Tensor>(*param_grads)
                 .subspan(param_offset_[i], param_offset_[i + 1] - param_offset_[i]);
    }
    const bool want_input = need_input_grad || i > 0;
    g = layers_[i]->vjp(trace[i], trace[i + 1], g, slot, want_input);
    if (!want_input) return {};
  }
  return g;
}

Tensor Network::jvp_batch(const Tensor& batch, const Tensor& tangent, std::size_t tap) const {
  check_tap(tap);
  check_batch(batch, "jvp");
  if (tangent.shape() != batch.shape()) {
    throw ShapeError("jvp: tangent shape " + shape_str(tangent.shape()) +
                     " does not match input " + shape_str(batch.shape()));
  }
  Tensor x = batch;
  Tensor t = tangent;
  for (std::size_t i = 0; i < tap; ++i) {
    Tensor y = layers_[i]->forward(x);
    t = layers_[i]->jvp(x, y, t);
    x = std::move(y);
  }
  return t;
}

std::uint64_t Network::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : layers_) {
    h = tensor_hash(Tensor::vector({static_cast<double>(l->kind())}), h);
    const auto cfg = l->config();
    if (!cfg.empty()) h = tensor_hash(Tensor::vector(std::span<const double>(cfg)), h);
    for (const Tensor& p : std::as_const(*l).parameters()) h = tensor_hash(p, h);
  }
  return h;
}

namespace {

// Lifts a single sample to a batch of one; reports whether it did.
std::pair<Tensor, bool> as_batch(const Network& net, const Tensor& input) {
  if (input.shape() == net.input_shape()) {
    Shape s{1};
    s.insert(s.end(), input.shape().begin(), input.shape().end());
    return {input.reshaped(std::move(s)), true};
  }
  return {input, false};
}

Tensor unbatch(const Tensor& t) {
  return t.reshaped(Shape(t.shape().begin() + 1, t.shape().end()));
}

}  // namespace

Tensor forward(const Network& net, const Tensor& input, std::optional<std::size_t> tap) {
  auto [batch, single] = as_batch(net, input);
  Tensor out = net.forward_batch(batch, tap.value_or(net.depth()));
  return single ? unbatch(out) : out;
}

Tensor vjp(const Network& net, const Tensor& input, const Tensor& cotangent,
           std::optional<std::size_t> tap) {
  auto [batch, single] = as_batch(net, input);
  const std::size_t t = tap.value_or(net.depth());
  const auto acts = net.trace(batch, t);
  Tensor cot = cotangent;
  if (single) {
    if (cotangent.shape() != net.shape_at(t)) {
      throw ShapeError("vjp: cotangent shape " + shape_str(cotangent.shape()) +
                       " does not match tap output " + shape_str(net.shape_at(t)));
    }
    cot = cotangent.reshaped(acts.back().shape());
  }
  Tensor g = net.backward(acts, cot, nullptr, true);
  return single ? unbatch(g) : g;
}

Tensor jvp(const Network& net, const Tensor& input, const Tensor& tangent,
           std::optional<std::size_t> tap) {
  auto [batch, single] = as_batch(net, input);
  Tensor tan = tangent;
  if (single) {
    if (tangent.shape() != input.shape()) {
      throw ShapeError("jvp: tangent shape " + shape_str(tangent.shape()) +
                       " does not match input " + shape_str(input.shape()));
    }
    tan = tangent.reshaped(batch.shape());
  }
  Tensor t = net.jvp_batch(batch, tan, tap.value_or(net.depth()));
  return single ? unbatch(t) : t;
}

ParamGradients param_gradients(const Network& net, const Tensor& batch, const LossSpec& loss) {
  const auto acts = net.trace(batch);
  LossResult lr = evaluate_loss(loss, acts.back());
  ParamGradients out;
  out.loss = lr.value;
  out.grads = net.zero_gradients();
  net.backward(acts, lr.grad, &out.grads, false);
  return out;
}

}  // namespace latdis
