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

#ifndef LATDIS_NETWORK_HPP_
#define LATDIS_NETWORK_HPP_

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "latdis/layers.hpp"
#include "latdis/loss.hpp"
#include "latdis/tensor.hpp"

namespace latdis {

// Ordered chain of layers on a fixed per-sample input shape.
//
// Tap i names the activation after the first i layers: tap 0 is the input,
// tap depth() is the network output. Networks are values; copying deep-copies
// every layer.
class Network {
 public:
  Network() = default;
  explicit Network(Shape input_shape);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  ~Network() = default;

  // Appends a layer; throws ShapeError naming the layer index if it cannot
  // consume the current output shape.
  Network& append(std::unique_ptr<Layer> layer);
  template <class L>
  Network& add(L layer) {
    return append(std::make_unique<L>(std::move(layer)));
  }

  std::size_t depth() const { return layers_.size(); }
  const Shape& input_shape() const { return shapes_.front(); }
  const Shape& output_shape() const { return shapes_.back(); }
  const Shape& shape_at(std::size_t tap) const;

  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  // Zero tensors shaped like parameters(), in the same order.
  std::vector<Tensor> zero_gradients() const;

  // Layers [0, tap) and [tap, depth()).
  Network prefix(std::size_t tap) const;
  Network suffix(std::size_t tap) const;

  // Batched evaluation: `batch` is [B, input_shape...].
  Tensor forward_batch(const Tensor& batch, std::size_t tap) const;
  Tensor forward_batch(const Tensor& batch) const { return forward_batch(batch, depth()); }
  // Activations at taps 0..tap; element 0 is a copy of `batch`.
  std::vector<Tensor> trace(const Tensor& batch, std::size_t tap) const;
  std::vector<Tensor> trace(const Tensor& batch) const { return trace(batch, depth()); }
  // Back-propagates `grad_out` (shaped like trace.back()) through the layers
  // that produced the trace. Parameter gradients, if requested, are added to
  // `param_grads` (ordered as parameters()). Returns the input gradient, or an
  // empty tensor when `need_input_grad` is false.
  Tensor backward(const std::vector<Tensor>& trace, const Tensor& grad_out,
                  std::vector<Tensor>* param_grads, bool need_input_grad = true) const;
  Tensor jvp_batch(const Tensor& batch, const Tensor& tangent, std::size_t tap) const;

  std::uint64_t hash() const;

 private:
  void check_batch(const Tensor& batch, const char* what) const;
  void check_tap(std::size_t tap) const;

  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Shape> shapes_;  // shapes_[i] = per-sample shape at tap i
  std::vector<std::size_t> param_offset_;
};

// Single-sample or batched evaluation. `input` is either net.input_shape() or
// [B, net.input_shape()...]; the result has the matching form. tap defaults
// to the full network.
Tensor forward(const Network& net, const Tensor& input, std::optional<std::size_t> tap = {});
// J^T v for the Jacobian of the tap output w.r.t. the input.
Tensor vjp(const Network& net, const Tensor& input, const Tensor& cotangent,
           std::optional<std::size_t> tap = {});
// J u.
Tensor jvp(const Network& net, const Tensor& input, const Tensor& tangent,
           std::optional<std::size_t> tap = {});

struct ParamGradients {
  double loss = 0.0;
  std::vector<Tensor> grads;  // ordered as Network::parameters()
};

// Gradients of the mean batch loss w.r.t. every parameter.
ParamGradients param_gradients(const Network& net, const Tensor& batch, const LossSpec& loss);

}  // namespace latdis

#endif  // LATDIS_NETWORK_HPP_
