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

#ifndef LATDIS_LAYERS_HPP_
#define LATDIS_LAYERS_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "latdis/rng.hpp"
#include "latdis/tensor.hpp"

namespace latdis {

// Stable numeric tags; they are part of the artifact file format.
enum class LayerKind : std::uint8_t {
  kDense = 0,
  kConv2D = 1,
  kTransposedConv2D = 2,
  kNearestUpsample = 3,
  kReshape = 4,
  kLeakyReLU = 5,
  kTanh = 6,
  kSigmoid = 7,
  kAffine = 8,
  kAvgPool2D = 9,
  kBlobRender = 10,
};

const char* layer_kind_name(LayerKind kind);

// One differentiable stage of a Network.
//
// All tensors passed to a layer are batched: the leading dimension is the
// batch size and the remaining dimensions are the per-sample shape.
// `output_shape` works on per-sample shapes. Parameter gradients are
// accumulated into `param_grads` in batch order, one sample at a time.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::string describe() const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;

  virtual Tensor forward(const Tensor& in) const = 0;
  virtual Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const = 0;
  // Returns dL/d(in) when `need_input_grad`, otherwise an empty tensor.
  virtual Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                     std::span<Tensor> param_grads, bool need_input_grad) const = 0;

  virtual std::span<Tensor> parameters() { return {}; }
  virtual std::span<const Tensor> parameters() const { return {}; }

  // Scalar hyperparameters; together with parameters() they rebuild the layer.
  virtual std::vector<double> config() const = 0;
  // True when the map is linear in its input (bias terms aside).
  virtual bool is_linear() const { return false; }

  virtual std::unique_ptr<Layer> clone() const = 0;
};

class Dense final : public Layer {
 public:
  // weight [out, in], bias [out].
  Dense(Tensor weight, Tensor bias);
  static Dense random(std::size_t in, std::size_t out, Rng& rng, double gain = 1.0);

  LayerKind kind() const override { return LayerKind::kDense; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::span<Tensor> parameters() override { return params_; }
  std::span<const Tensor> parameters() const override { return params_; }
  std::vector<double> config() const override;
  bool is_linear() const override { return true; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  const Tensor& weight() const { return params_[0]; }
  const Tensor& bias() const { return params_[1]; }
  std::size_t in_features() const { return params_[0].dim(1); }
  std::size_t out_features() const { return params_[0].dim(0); }

 private:
  std::vector<Tensor> params_;
};

// Square-kernel convolution with symmetric zero padding, NCHW layout.
// Output size: (H + 2*pad - kernel) / stride + 1.
class Conv2D final : public Layer {
 public:
  // weight [out_c, in_c, k, k], bias [out_c].
  Conv2D(Tensor weight, Tensor bias, std::size_t stride = 1, std::size_t pad = 1);
  static Conv2D random(std::size_t in_c, std::size_t out_c, std::size_t kernel,
                       std::size_t stride, std::size_t pad, Rng& rng, double gain = 1.0);

  LayerKind kind() const override { return LayerKind::kConv2D; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::span<Tensor> parameters() override { return params_; }
  std::span<const Tensor> parameters() const override { return params_; }
  std::vector<double> config() const override;
  bool is_linear() const override { return true; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2D>(*this); }

 private:
  Tensor apply(const Tensor& in, bool with_bias) const;
  std::vector<Tensor> params_;
  std::size_t stride_;
  std::size_t pad_;
};

// Adjoint of Conv2D with the same geometry. The default 4x4 / stride 2 /
// pad 1 doubles spatial size: out = (H - 1) * stride - 2 * pad + kernel, no
// output padding.
class TransposedConv2D final : public Layer {
 public:
  // weight [in_c, out_c, k, k], bias [out_c].
  TransposedConv2D(Tensor weight, Tensor bias, std::size_t stride = 2, std::size_t pad = 1);
  static TransposedConv2D random(std::size_t in_c, std::size_t out_c, Rng& rng,
                                 std::size_t kernel = 4, std::size_t stride = 2,
                                 std::size_t pad = 1, double gain = 1.0);

  LayerKind kind() const override { return LayerKind::kTransposedConv2D; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::span<Tensor> parameters() override { return params_; }
  std::span<const Tensor> parameters() const override { return params_; }
  std::vector<double> config() const override;
  bool is_linear() const override { return true; }
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<TransposedConv2D>(*this);
  }

 private:
  Tensor apply(const Tensor& in, bool with_bias) const;
  std::vector<Tensor> params_;
  std::size_t stride_;
  std::size_t pad_;
};

class NearestUpsample final : public Layer {
 public:
  explicit NearestUpsample(std::size_t factor = 2);

  LayerKind kind() const override { return LayerKind::kNearestUpsample; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::vector<double> config() const override { return {static_cast<double>(factor_)}; }
  bool is_linear() const override { return true; }
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<NearestUpsample>(*this);
  }

 private:
  std::size_t factor_;
};

// Mean over non-overlapping factor x factor windows.
class AvgPool2D final : public Layer {
 public:
  explicit AvgPool2D(std::size_t factor = 2);

  LayerKind kind() const override { return LayerKind::kAvgPool2D; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::vector<double> config() const override { return {static_cast<double>(factor_)}; }
  bool is_linear() const override { return true; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<AvgPool2D>(*this); }

 private:
  std::size_t factor_;
};

class Reshape final : public Layer {
 public:
  explicit Reshape(Shape target);

  LayerKind kind() const override { return LayerKind::kReshape; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::vector<double> config() const override;
  bool is_linear() const override { return true; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Reshape>(*this); }

 private:
  Shape target_;
};

// slope 0 gives ReLU. The derivative at exactly 0 is 1.
class LeakyReLU final : public Layer {
 public:
  explicit LeakyReLU(double slope = 0.2);

  LayerKind kind() const override { return LayerKind::kLeakyReLU; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::vector<double> config() const override { return {slope_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<LeakyReLU>(*this); }

  double slope() const { return slope_; }

 private:
  double slope_;
};

class Tanh final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kTanh; }
  std::string describe() const override { return "Tanh"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::vector<double> config() const override { return {}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Tanh>(*this); }
};

class Sigmoid final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kSigmoid; }
  std::string describe() const override { return "Sigmoid"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::vector<double> config() const override { return {}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(*this); }
};

// y = scale * x + bias, elementwise. scale and bias are either shape [1]
// (broadcast) or the per-sample shape.
class Affine final : public Layer {
 public:
  Affine(double scale, double bias);
  Affine(Tensor scale, Tensor bias);

  LayerKind kind() const override { return LayerKind::kAffine; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::span<Tensor> parameters() override { return params_; }
  std::span<const Tensor> parameters() const override { return params_; }
  std::vector<double> config() const override { return {}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Affine>(*this); }

 private:
  std::vector<Tensor> params_;
};

// Renders one Gaussian blob from a factor vector
//   [x, y, width, hue, brightness]
// into a [3, H, W] image:
//   pixel(c, py, px) = brightness * hue_c * exp(-((px - x)^2 + (py - y)^2) / (2 width^2))
// with hue_c = 0.5 + 0.4 cos(hue - 2 pi c / 3). Pixel (py, px) sits at integer
// coordinates, so an H x W image is centred at ((H - 1) / 2, (W - 1) / 2).
class BlobRender final : public Layer {
 public:
  static constexpr std::size_t kFactors = 5;
  static constexpr std::size_t kChannels = 3;

  BlobRender(std::size_t height, std::size_t width);

  LayerKind kind() const override { return LayerKind::kBlobRender; }
  std::string describe() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in) const override;
  Tensor jvp(const Tensor& in, const Tensor& out, const Tensor& tangent) const override;
  Tensor vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
             std::span<Tensor> param_grads, bool need_input_grad) const override;
  std::vector<double> config() const override {
    return {static_cast<double>(height_), static_cast<double>(width_)};
  }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BlobRender>(*this); }

  static double hue_weight(double hue, std::size_t channel);
  static double hue_weight_derivative(double hue, std::size_t channel);

 private:
  std::size_t height_;
  std::size_t width_;
};

// Rebuilds a layer from its kind, config() values and parameter tensors.
std::unique_ptr<Layer> make_layer(LayerKind kind, std::span<const double> config,
                                  std::vector<Tensor> params);

}  // namespace latdis

#endif  // LATDIS_LAYERS_HPP_
