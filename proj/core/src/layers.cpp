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

#include "latdis/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kernels.hpp"

namespace latdis {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "Dense";
    case LayerKind::kConv2D: return "Conv2D";
    case LayerKind::kTransposedConv2D: return "TransposedConv2D";
    case LayerKind::kNearestUpsample: return "NearestUpsample";
    case LayerKind::kReshape: return "Reshape";
    case LayerKind::kLeakyReLU: return "LeakyReLU";
    case LayerKind::kTanh: return "Tanh";
    case LayerKind::kSigmoid: return "Sigmoid";
    case LayerKind::kAffine: return "Affine";
    case LayerKind::kAvgPool2D: return "AvgPool2D";
    case LayerKind::kBlobRender: return "BlobRender";
  }
  return "Unknown";
}

namespace {

std::size_t batch_size(const Tensor& t) { return t.dim(0); }

Shape sample_shape(const Tensor& t) { return Shape(t.shape().begin() + 1, t.shape().end()); }

Shape with_batch(std::size_t batch, const Shape& sample) {
  Shape s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

void require_chw(const Shape& in, const char* who) {
  if (in.size() != 3) {
    throw ShapeError(std::string(who) + " expects [C, H, W] input, got " + shape_str(in));
  }
}

// Patch geometry of a square-kernel convolution: the "big" tensor is
// [channels, height, width]; the "small" grid has out_h x out_w positions.
struct PatchGeometry {
  std::size_t channels, height, width, kernel, stride, pad, out_h, out_w;
  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return out_h * out_w; }
};

void im2col(const double* big, const PatchGeometry& g, double* col) {
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = big + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx, ++r) {
        double* dst = col + r * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.height) &&
                                ix < static_cast<std::ptrdiff_t>(g.width);
            dst[oy * g.out_w + ox] = inside ? plane[iy * static_cast<std::ptrdiff_t>(g.width) + ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into `big`.
void col2im(const double* col, const PatchGeometry& g, double* big) {
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = big + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx, ++r) {
        const double* src = col + r * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
            plane[iy * static_cast<std::ptrdiff_t>(g.width) + ix] += src[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

Tensor random_normal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  rng.fill_normal(t.data(), stddev);
  return t;
}

std::size_t as_size(double v) { return static_cast<std::size_t>(std::llround(v)); }

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(Tensor weight, Tensor bias) {
  if (weight.ndim() != 2) throw ShapeError("Dense weight must be [out, in], got " + shape_str(weight.shape()));
  if (bias.shape() != Shape{weight.dim(0)}) {
    throw ShapeError("Dense bias must be [" + std::to_string(weight.dim(0)) + "], got " +
                     shape_str(bias.shape()));
  }
  weight.require_finite("Dense weight");
  bias.require_finite("Dense bias");
  params_ = {std::move(weight), std::move(bias)};
}

Dense Dense::random(std::size_t in, std::size_t out, Rng& rng, double gain) {
  return Dense(random_normal({out, in}, gain / std::sqrt(static_cast<double>(in)), rng),
               Tensor({out}));
}

std::string Dense::describe() const {
  return "Dense(" + std::to_string(in_features()) + " -> " + std::to_string(out_features()) + ")";
}

Shape Dense::output_shape(const Shape& in) const {
  if (in != Shape{in_features()}) {
    throw ShapeError(describe() + " expects input [" + std::to_string(in_features()) + "], got " +
                     shape_str(in));
  }
  return {out_features()};
}

Tensor Dense::forward(const Tensor& in) const {
  const std::size_t b = batch_size(in);
  Tensor out({b, out_features()});
  for (std::size_t i = 0; i < b; ++i) {
    std::copy(bias().data().begin(), bias().data().end(), out.row(i).begin());
  }
  kernels::gemm_nt_acc(in.ptr(), weight().ptr(), out.ptr(), b, out_features(), in_features());
  return out;
}

Tensor Dense::jvp(const Tensor&, const Tensor&, const Tensor& tangent) const {
  const std::size_t b = batch_size(tangent);
  Tensor out({b, out_features()});
  kernels::gemm_nt_acc(tangent.ptr(), weight().ptr(), out.ptr(), b, out_features(), in_features());
  return out;
}

Tensor Dense::vjp(const Tensor& in, const Tensor&, const Tensor& grad_out,
                  std::span<Tensor> param_grads, bool need_input_grad) const {
  const std::size_t b = batch_size(grad_out);
  if (!param_grads.empty()) {
    kernels::gemm_tn_acc(grad_out.ptr(), in.ptr(), param_grads[0].ptr(), b, out_features(),
                         in_features());
    double* db = param_grads[1].ptr();
    for (std::size_t i = 0; i < b; ++i) {
      const double* g = grad_out.ptr() + i * out_features();
      for (std::size_t o = 0; o < out_features(); ++o) db[o] += g[o];
    }
  }
  if (!need_input_grad) return {};
  Tensor gin({b, in_features()});
  kernels::gemm_nn_acc(grad_out.ptr(), weight().ptr(), gin.ptr(), b, out_features(),
                       in_features());
  return gin;
}

std::vector<double> Dense::config() const {
  return {static_cast<double>(in_features()), static_cast<double>(out_features())};
}

// ---------------------------------------------------------------- Conv2D

Conv2D::Conv2D(Tensor weight, Tensor bias, std::size_t stride, std::size_t pad)
    : stride_(stride), pad_(pad) {
  if (weight.ndim() != 4 || weight.dim(2) != weight.dim(3)) {
    throw ShapeError("Conv2D weight must be [out_c, in_c, k, k], got " + shape_str(weight.shape()));
  }
  if (bias.shape() != Shape{weight.dim(0)}) throw ShapeError("Conv2D bias must be [out_c]");
  if (stride == 0) throw ShapeError("Conv2D stride must be positive");
  weight.require_finite("Conv2D weight");
  bias.require_finite("Conv2D bias");
  params_ = {std::move(weight), std::move(bias)};
}

Conv2D Conv2D::random(std::size_t in_c, std::size_t out_c, std::size_t kernel, std::size_t stride,
                      std::size_t pad, Rng& rng, double gain) {
  const double fan_in = static_cast<double>(in_c * kernel * kernel);
  return Conv2D(random_normal({out_c, in_c, kernel, kernel}, gain / std::sqrt(fan_in), rng),
                Tensor({out_c}), stride, pad);
}

std::string Conv2D::describe() const {
  const Shape& w = params_[0].shape();
  std::ostringstream os;
  os << "Conv2D(" << w[1] << " -> " << w[0] << ", k=" << w[2] << ", s=" << stride_
     << ", p=" << pad_ << ")";
  return os.str();
}

Shape Conv2D::output_shape(const Shape& in) const {
  require_chw(in, "Conv2D");
  const Shape& w = params_[0].shape();
  if (in[0] != w[1]) {
    throw ShapeError(describe() + " expects " + std::to_string(w[1]) + " input channels, got " +
                     shape_str(in));
  }
  const std::size_t k = w[2];
  if (in[1] + 2 * pad_ < k || in[2] + 2 * pad_ < k) {
    throw ShapeError(describe() + " kernel larger than padded input " + shape_str(in));
  }
  return {w[0], (in[1] + 2 * pad_ - k) / stride_ + 1, (in[2] + 2 * pad_ - k) / stride_ + 1};
}

Tensor Conv2D::apply(const Tensor& in, bool with_bias) const {
  const Shape in_s = sample_shape(in);
  const Shape out_s = output_shape(in_s);
  const std::size_t b = batch_size(in);
  const Tensor& w = params_[0];
  const PatchGeometry g{in_s[0], in_s[1], in_s[2], w.dim(2), stride_, pad_, out_s[1], out_s[2]};
  Tensor out(with_batch(b, out_s));
  std::vector<double> col(g.rows() * g.cols());
  const std::size_t in_n = numel(in_s);
  const std::size_t out_n = numel(out_s);
  for (std::size_t i = 0; i < b; ++i) {
    double* o = out.ptr() + i * out_n;
    if (with_bias) {
      for (std::size_t c = 0; c < out_s[0]; ++c) {
        std::fill(o + c * g.cols(), o + (c + 1) * g.cols(), params_[1][c]);
      }
    }
    im2col(in.ptr() + i * in_n, g, col.data());
    kernels::gemm_nn_acc(w.ptr(), col.data(), o, out_s[0], g.rows(), g.cols());
  }
  return out;
}

Tensor Conv2D::forward(const Tensor& in) const { return apply(in, true); }

Tensor Conv2D::jvp(const Tensor&, const Tensor&, const Tensor& tangent) const {
  return apply(tangent, false);
}

Tensor Conv2D::vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                   std::span<Tensor> param_grads, bool need_input_grad) const {
  const Shape in_s = sample_shape(in);
  const Shape out_s = sample_shape(out);
  const std::size_t b = batch_size(in);
  const Tensor& w = params_[0];
  const PatchGeometry g{in_s[0], in_s[1], in_s[2], w.dim(2), stride_, pad_, out_s[1], out_s[2]};
  const std::size_t in_n = numel(in_s);
  const std::size_t out_n = numel(out_s);
  const std::size_t oc = out_s[0];
  Tensor gin;
  if (need_input_grad) gin = Tensor(in.shape());
  std::vector<double> col(g.rows() * g.cols());
  std::vector<double> gcol(g.rows() * g.cols());
  for (std::size_t i = 0; i < b; ++i) {
    const double* go = grad_out.ptr() + i * out_n;
    if (!param_grads.empty()) {
      im2col(in.ptr() + i * in_n, g, col.data());
      kernels::gemm_nt_acc(go, col.data(), param_grads[0].ptr(), oc, g.rows(), g.cols());
      double* db = param_grads[1].ptr();
      for (std::size_t c = 0; c < oc; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < g.cols(); ++p) s += go[c * g.cols() + p];
        db[c] += s;
      }
    }
    if (need_input_grad) {
      std::fill(gcol.begin(), gcol.end(), 0.0);
      kernels::gemm_tn_acc(w.ptr(), go, gcol.data(), oc, g.rows(), g.cols());
      col2im(gcol.data(), g, gin.ptr() + i * in_n);
    }
  }
  return gin;
}

std::vector<double> Conv2D::config() const {
  const Shape& w = params_[0].shape();
  return {static_cast<double>(w[1]), static_cast<double>(w[0]), static_cast<double>(w[2]),
          static_cast<double>(stride_), static_cast<double>(pad_)};
}

// ------------------------------------------------------ TransposedConv2D

TransposedConv2D::TransposedConv2D(Tensor weight, Tensor bias, std::size_t stride, std::size_t pad)
    : stride_(stride), pad_(pad) {
  if (weight.ndim() != 4 || weight.dim(2) != weight.dim(3)) {
    throw ShapeError("TransposedConv2D weight must be [in_c, out_c, k, k], got " +
                     shape_str(weight.shape()));
  }
  if (bias.shape() != Shape{weight.dim(1)}) throw ShapeError("TransposedConv2D bias must be [out_c]");
  if (stride == 0) throw ShapeError("TransposedConv2D stride must be positive");
  if (2 * pad > weight.dim(2)) throw ShapeError("TransposedConv2D padding exceeds kernel");
  weight.require_finite("TransposedConv2D weight");
  bias.require_finite("TransposedConv2D bias");
  params_ = {std::move(weight), std::move(bias)};
}

TransposedConv2D TransposedConv2D::random(std::size_t in_c, std::size_t out_c, Rng& rng,
                                          std::size_t kernel, std::size_t stride, std::size_t pad,
                                          double gain) {
  const double fan_in =
      static_cast<double>(in_c * kernel * kernel) / static_cast<double>(stride * stride);
  return TransposedConv2D(random_normal({in_c, out_c, kernel, kernel}, gain / std::sqrt(fan_in), rng),
                          Tensor({out_c}), stride, pad);
}

std::string TransposedConv2D::describe() const {
  const Shape& w = params_[0].shape();
  std::ostringstream os;
  os << "TransposedConv2D(" << w[0] << " -> " << w[1] << ", k=" << w[2] << ", s=" << stride_
     << ", p=" << pad_ << ")";
  return os.str();
}

Shape TransposedConv2D::output_shape(const Shape& in) const {
  require_chw(in, "TransposedConv2D");
  const Shape& w = params_[0].shape();
  if (in[0] != w[0]) {
    throw ShapeError(describe() + " expects " + std::to_string(w[0]) + " input channels, got " +
                     shape_str(in));
  }
  const std::size_t k = w[2];
  return {w[1], (in[1] - 1) * stride_ + k - 2 * pad_, (in[2] - 1) * stride_ + k - 2 * pad_};
}

Tensor TransposedConv2D::apply(const Tensor& in, bool with_bias) const {
  const Shape in_s = sample_shape(in);
  const Shape out_s = output_shape(in_s);
  const std::size_t b = batch_size(in);
  const Tensor& w = params_[0];
  const PatchGeometry g{out_s[0], out_s[1], out_s[2], w.dim(2), stride_, pad_, in_s[1], in_s[2]};
  Tensor out(with_batch(b, out_s));
  std::vector<double> col(g.rows() * g.cols());
  const std::size_t in_n = numel(in_s);
  const std::size_t out_n = numel(out_s);
  const std::size_t plane = out_s[1] * out_s[2];
  for (std::size_t i = 0; i < b; ++i) {
    std::fill(col.begin(), col.end(), 0.0);
    kernels::gemm_tn_acc(w.ptr(), in.ptr() + i * in_n, col.data(), in_s[0], g.rows(), g.cols());
    double* o = out.ptr() + i * out_n;
    col2im(col.data(), g, o);
    if (with_bias) {
      for (std::size_t c = 0; c < out_s[0]; ++c) {
        const double bc = params_[1][c];
        for (std::size_t p = 0; p < plane; ++p) o[c * plane + p] += bc;
      }
    }
  }
  return out;
}

Tensor TransposedConv2D::forward(const Tensor& in) const { return apply(in, true); }

Tensor TransposedConv2D::jvp(const Tensor&, const Tensor&, const Tensor& tangent) const {
  return apply(tangent, false);
}

Tensor TransposedConv2D::vjp(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                             std::span<Tensor> param_grads, bool need_input_grad) const {
  const Shape in_s = sample_shape(in);
  const Shape out_s = sample_shape(out);
  const std::size_t b = batch_size(in);
  const Tensor& w = params_[0];
  const PatchGeometry g{out_s[0], out_s[1], out_s[2], w.dim(2), stride_, pad_, in_s[1], in_s[2]};
  const std::size_t in_n = numel(in_s);
  const std::size_t out_n = numel(out_s);
  const std::size_t plane = out_s[1] * out_s[2];
  Tensor gin;
  if (need_input_grad) gin = Tensor(in.shape());
  std::vector<double> gcol(g.rows() * g.cols());
  for (std::size_t i = 0; i < b; ++i) {
    const double* go = grad_out.ptr() + i * out_n;
    im2col(go, g, gcol.data());
    if (!param_grads.empty()) {
      kernels::gemm_nt_acc(in.ptr() + i * in_n, gcol.data(), param_grads[0].ptr(), in_s[0],
                           g.rows(), g.cols());
      double* db = param_grads[1].ptr();
      for (std::size_t c = 0; c < out_s[0]; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += go[c * plane + p];
        db[c] += s;
      }
    }
    if (need_input_grad) {
      kernels::gemm_nn_acc(w.ptr(), gcol.data(), gin.ptr() + i * in_n, in_s[0], g.rows(), g.cols());
    }
  }
  return gin;
}

std::vector<double> TransposedConv2D::config() const {
  const Shape& w = params_[0].shape();
  return {static_cast<double>(w[0]), static_cast<double>(w[1]), static_cast<double>(w[2]),
          static_cast<double>(stride_), static_cast<double>(pad_)};
}

// ------------------------------------------------------- NearestUpsample

NearestUpsample::NearestUpsample(std::size_t factor) : factor_(factor) {
  if (factor == 0) throw ShapeError("NearestUpsample factor must be positive");
}

std::string NearestUpsample::describe() const {
  return "NearestUpsample(x" + std::to_string(factor_) + ")";
}

Shape NearestUpsample::output_shape(const Shape& in) const {
  require_chw(in, "NearestUpsample");
  return {in[0], in[1] * factor_, in[2] * factor_};
}

Tensor NearestUpsample::forward(const Tensor& in) const {
  const Shape in_s = sample_shape(in);
  const Shape out_s = output_shape(in_s);
  Tensor out(with_batch(batch_size(in), out_s));
  const std::size_t planes = batch_size(in) * in_s[0];
  const std::size_t ih = in_s[1], iw = in_s[2], ow = out_s[2];
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = in.ptr() + p * ih * iw;
    double* dst = out.ptr() + p * out_s[1] * ow;
    for (std::size_t y = 0; y < out_s[1]; ++y) {
      for (std::size_t x = 0; x < ow; ++x) dst[y * ow + x] = src[(y / factor_) * iw + x / factor_];
    }
  }
  return out;
}

Tensor NearestUpsample::jvp(const Tensor&, const Tensor&, const Tensor& tangent) const {
  return forward(tangent);
}

Tensor NearestUpsample::vjp(const Tensor& in, const Tensor&, const Tensor& grad_out,
                            std::span<Tensor>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  const Shape in_s = sample_shape(in);
  Tensor gin(in.shape());
  const std::size_t planes = batch_size(in) * in_s[0];
  const std::size_t ih = in_s[1], iw = in_s[2], oh = ih * factor_, ow = iw * factor_;
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = grad_out.ptr() + p * oh * ow;
    double* dst = gin.ptr() + p * ih * iw;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) dst[(y / factor_) * iw + x / factor_] += src[y * ow + x];
    }
  }
  return gin;
}

// ------------------------------------------------------------- AvgPool2D

AvgPool2D::AvgPool2D(std::size_t factor) : factor_(factor) {
  if (factor == 0) throw ShapeError("AvgPool2D factor must be positive");
}

std::string AvgPool2D::describe() const { return "AvgPool2D(" + std::to_string(factor_) + ")"; }

Shape AvgPool2D::output_shape(const Shape& in) const {
  require_chw(in, "AvgPool2D");
  if (in[1] % factor_ != 0 || in[2] % factor_ != 0) {
    throw ShapeError(describe() + " needs spatial size divisible by factor, got " + shape_str(in));
  }
  return {in[0], in[1] / factor_, in[2] / factor_};
}

Tensor AvgPool2D::forward(const Tensor& in) const {
  const Shape in_s = sample_shape(in);
  const Shape out_s = output_shape(in_s);
  Tensor out(with_batch(batch_size(in), out_s));
  const std::size_t planes = batch_size(in) * in_s[0];
  const std::size_t iw = in_s[2], oh = out_s[1], ow = out_s[2];
  const double scale = 1.0 / static_cast<double>(factor_ * factor_);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = in.ptr() + p * in_s[1] * iw;
    double* dst = out.ptr() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double s = 0.0;
        for (std::size_t dy = 0; dy < factor_; ++dy) {
          for (std::size_t dx = 0; dx < factor_; ++dx) {
            s += src[(y * factor_ + dy) * iw + x * factor_ + dx];
          }
        }
        dst[y * ow + x] = s * scale;
      }
    }
  }
  return out;
}

Tensor AvgPool2D::jvp(const Tensor&, const Tensor&, const Tensor& tangent) const {
  return forward(tangent);
}

Tensor AvgPool2D::vjp(const Tensor& in, const Tensor&, const Tensor& grad_out, std::span<Tensor>,
                      bool need_input_grad) const {
  if (!need_input_grad) return {};
  const Shape in_s = sample_shape(in);
  Tensor gin(in.shape());
  const std::size_t planes = batch_size(in) * in_s[0];
  const std::size_t iw = in_s[2], oh = in_s[1] / factor_, ow = iw / factor_;
  const double scale = 1.0 / static_cast<double>(factor_ * factor_);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = grad_out.ptr() + p * oh * ow;
    double* dst = gin.ptr() + p * in_s[1] * iw;
    for (std::size_t y = 0; y < in_s[1]; ++y) {
      for (std::size_t x = 0; x < iw; ++x) {
        dst[y * iw + x] = src[(y / factor_) * ow + x / factor_] * scale;
      }
    }
  }
  return gin;
}

// --------------------------------------------------------------- Reshape

Reshape::Reshape(Shape target) : target_(std::move(target)) {
  if (target_.empty() || numel(target_) == 0) throw ShapeError("Reshape target must be non-empty");
}

std::string Reshape::describe() const { return "Reshape(" + shape_str(target_) + ")"; }

Shape Reshape::output_shape(const Shape& in) const {
  if (numel(in) != numel(target_)) {
    throw ShapeError(describe() + " cannot take input " + shape_str(in));
  }
  return target_;
}

Tensor Reshape::forward(const Tensor& in) const {
  return in.reshaped(with_batch(batch_size(in), target_));
}

Tensor Reshape::jvp(const Tensor&, const Tensor&, const Tensor& tangent) const {
  return forward(tangent);
}

Tensor Reshape::vjp(const Tensor& in, const Tensor&, const Tensor& grad_out, std::span<Tensor>,
                    bool need_input_grad) const {
  if (!need_input_grad) return {};
  return grad_out.reshaped(in.shape());
}

std::vector<double> Reshape::config() const {
  std::vector<double> c;
  for (std::size_t d : target_) c.push_back(static_cast<double>(d));
  return c;
}

// ------------------------------------------------------------- LeakyReLU

LeakyReLU::LeakyReLU(double slope) : slope_(slope) {
  if (!std::isfinite(slope)) throw NonFiniteError("LeakyReLU slope must be finite");
}

std::string LeakyReLU::describe() const {
  std::ostringstream os;
  os << "LeakyReLU(" << slope_ << ")";
  return os.str();
}

Tensor LeakyReLU::forward(const Tensor& in) const {
  Tensor out(in.shape());
  const double* x = in.ptr();
  double* y = out.ptr();
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = x[i] >= 0.0 ? x[i] : slope_ * x[i];
  return out;
}

Tensor LeakyReLU::jvp(const Tensor& in, const Tensor&, const Tensor& tangent) const {
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i] >= 0.0 ? tangent[i] : slope_ * tangent[i];
  }
  return out;
}

Tensor LeakyReLU::vjp(const Tensor& in, const Tensor&, const Tensor& grad_out, std::span<Tensor>,
                      bool need_input_grad) const {
  if (!need_input_grad) return {};
  Tensor gin(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    gin[i] = in[i] >= 0.0 ? grad_out[i] : slope_ * grad_out[i];
  }
  return gin;
}

// ------------------------------------------------------ Tanh and Sigmoid

Tensor Tanh::forward(const Tensor& in) const {
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
  return out;
}

Tensor Tanh::jvp(const Tensor&, const Tensor& out, const Tensor& tangent) const {
  Tensor t(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) t[i] = (1.0 - out[i] * out[i]) * tangent[i];
  return t;
}

Tensor Tanh::vjp(const Tensor&, const Tensor& out, const Tensor& grad_out, std::span<Tensor>,
                 bool need_input_grad) const {
  if (!need_input_grad) return {};
  return jvp(out, out, grad_out);
}

namespace {
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Tensor Sigmoid::forward(const Tensor& in) const {
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
  return out;
}

Tensor Sigmoid::jvp(const Tensor&, const Tensor& out, const Tensor& tangent) const {
  Tensor t(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) t[i] = out[i] * (1.0 - out[i]) * tangent[i];
  return t;
}

Tensor Sigmoid::vjp(const Tensor&, const Tensor& out, const Tensor& grad_out, std::span<Tensor>,
                    bool need_input_grad) const {
  if (!need_input_grad) return {};
  return jvp(out, out, grad_out);
}

// ---------------------------------------------------------------- Affine

Affine::Affine(double scale, double bias) : Affine(Tensor::vector({scale}), Tensor::vector({bias})) {}

Affine::Affine(Tensor scale, Tensor bias) {
  if (scale.shape() != bias.shape()) {
    throw ShapeError("Affine scale " + shape_str(scale.shape()) + " and bias " +
                     shape_str(bias.shape()) + " differ");
  }
  scale.require_finite("Affine scale");
  bias.require_finite("Affine bias");
  params_ = {std::move(scale), std::move(bias)};
}

std::string Affine::describe() const {
  if (params_[0].size() == 1) {
    std::ostringstream os;
    os << "Affine(scale=" << params_[0][0] << ", bias=" << params_[1][0] << ")";
    return os.str();
  }
  return "Affine(" + shape_str(params_[0].shape()) + ")";
}

Shape Affine::output_shape(const Shape& in) const {
  if (params_[0].size() != 1 && params_[0].shape() != in) {
    throw ShapeError(describe() + " cannot take input " + shape_str(in));
  }
  return in;
}

Tensor Affine::forward(const Tensor& in) const {
  Tensor out(in.shape());
  const std::size_t n = in.size() / batch_size(in);
  const bool scalar = params_[0].size() == 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t e = scalar ? 0 : i % n;
    out[i] = params_[0][e] * in[i] + params_[1][e];
  }
  return out;
}

Tensor Affine::jvp(const Tensor&, const Tensor&, const Tensor& tangent) const {
  Tensor out(tangent.shape());
  const std::size_t n = tangent.size() / batch_size(tangent);
  const bool scalar = params_[0].size() == 1;
  for (std::size_t i = 0; i < tangent.size(); ++i) {
    out[i] = params_[0][scalar ? 0 : i % n] * tangent[i];
  }
  return out;
}

Tensor Affine::vjp(const Tensor& in, const Tensor&, const Tensor& grad_out,
                   std::span<Tensor> param_grads, bool need_input_grad) const {
  const std::size_t b = batch_size(in);
  const std::size_t n = in.size() / b;
  const bool scalar = params_[0].size() == 1;
  if (!param_grads.empty()) {
    for (std::size_t s = 0; s < b; ++s) {
      for (std::size_t e = 0; e < n; ++e) {
        const std::size_t i = s * n + e;
        const std::size_t p = scalar ? 0 : e;
        param_grads[0][p] += grad_out[i] * in[i];
        param_grads[1][p] += grad_out[i];
      }
    }
  }
  if (!need_input_grad) return {};
  Tensor gin(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    gin[i] = params_[0][scalar ? 0 : i % n] * grad_out[i];
  }
  return gin;
}

// ------------------------------------------------------------ BlobRender

BlobRender::BlobRender(std::size_t height, std::size_t width) : height_(height), width_(width) {
  if (height == 0 || width == 0) throw ShapeError("BlobRender needs a non-empty image");
}

std::string BlobRender::describe() const {
  return "BlobRender(" + std::to_string(height_) + "x" + std::to_string(width_) + ")";
}

Shape BlobRender::output_shape(const Shape& in) const {
  if (in != Shape{kFactors}) {
    throw ShapeError(describe() + " expects [5] factors, got " + shape_str(in));
  }
  return {kChannels, height_, width_};
}

double BlobRender::hue_weight(double hue, std::size_t channel) {
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(channel) / 3.0;
  return 0.5 + 0.4 * std::cos(hue - phase);
}

double BlobRender::hue_weight_derivative(double hue, std::size_t channel) {
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(channel) / 3.0;
  return -0.4 * std::sin(hue - phase);
}

namespace {

struct BlobTerms {
  std::vector<double> gx, gy;  // separable Gaussian profiles
  std::vector<double> dx, dy;  // (px - x), (py - y)
  double inv_var;              // 1 / width^2
};

BlobTerms blob_terms(const double* f, std::size_t h, std::size_t w) {
  const double width = f[2];
  if (!(width > 0.0)) throw std::domain_error("BlobRender: blob width must be positive");
  BlobTerms t;
  t.inv_var = 1.0 / (width * width);
  t.gx.resize(w);
  t.dx.resize(w);
  t.gy.resize(h);
  t.dy.resize(h);
  for (std::size_t px = 0; px < w; ++px) {
    t.dx[px] = static_cast<double>(px) - f[0];
    t.gx[px] = std::exp(-0.5 * t.dx[px] * t.dx[px] * t.inv_var);
  }
  for (std::size_t py = 0; py < h; ++py) {
    t.dy[py] = static_cast<double>(py) - f[1];
    t.gy[py] = std::exp(-0.5 * t.dy[py] * t.dy[py] * t.inv_var);
  }
  return t;
}

}  // namespace

Tensor BlobRender::forward(const Tensor& in) const {
  const std::size_t b = batch_size(in);
  output_shape(sample_shape(in));
  Tensor out({b, kChannels, height_, width_});
  const std::size_t plane = height_ * width_;
  for (std::size_t s = 0; s < b; ++s) {
    const double* f = in.ptr() + s * kFactors;
    const BlobTerms t = blob_terms(f, height_, width_);
    for (std::size_t c = 0; c < kChannels; ++c) {
      const double amp = f[4] * hue_weight(f[3], c);
      double* o = out.ptr() + (s * kChannels + c) * plane;
      for (std::size_t py = 0; py < height_; ++py) {
        const double row = amp * t.gy[py];
        for (std::size_t px = 0; px < width_; ++px) o[py * width_ + px] = row * t.gx[px];
      }
    }
  }
  return out;
}

Tensor BlobRender::jvp(const Tensor& in, const Tensor&, const Tensor& tangent) const {
  const std::size_t b = batch_size(in);
  Tensor out({b, kChannels, height_, width_});
  const std::size_t plane = height_ * width_;
  for (std::size_t s = 0; s < b; ++s) {
    const double* f = in.ptr() + s * kFactors;
    const double* u = tangent.ptr() + s * kFactors;
    const BlobTerms t = blob_terms(f, height_, width_);
    const double inv_w3 = t.inv_var / f[2];
    for (std::size_t c = 0; c < kChannels; ++c) {
      const double hc = hue_weight(f[3], c);
      const double amp = f[4] * hc;
      const double amp_hue = f[4] * hue_weight_derivative(f[3], c) * u[3] + hc * u[4];
      double* o = out.ptr() + (s * kChannels + c) * plane;
      for (std::size_t py = 0; py < height_; ++py) {
        for (std::size_t px = 0; px < width_; ++px) {
          const double g = t.gy[py] * t.gx[px];
          const double r2 = t.dx[px] * t.dx[px] + t.dy[py] * t.dy[py];
          const double geo = (t.dx[px] * u[0] + t.dy[py] * u[1]) * t.inv_var + r2 * inv_w3 * u[2];
          o[py * width_ + px] = g * (amp * geo + amp_hue);
        }
      }
    }
  }
  return out;
}

Tensor BlobRender::vjp(const Tensor& in, const Tensor&, const Tensor& grad_out, std::span<Tensor>,
                       bool need_input_grad) const {
  if (!need_input_grad) return {};
  const std::size_t b = batch_size(in);
  Tensor gin(in.shape());
  const std::size_t plane = height_ * width_;
  for (std::size_t s = 0; s < b; ++s) {
    const double* f = in.ptr() + s * kFactors;
    const BlobTerms t = blob_terms(f, height_, width_);
    const double inv_w3 = t.inv_var / f[2];
    double* gf = gin.ptr() + s * kFactors;
    for (std::size_t c = 0; c < kChannels; ++c) {
      const double hc = hue_weight(f[3], c);
      const double amp = f[4] * hc;
      const double* go = grad_out.ptr() + (s * kChannels + c) * plane;
      double sx = 0.0, sy = 0.0, sr = 0.0, sg = 0.0;
      for (std::size_t py = 0; py < height_; ++py) {
        for (std::size_t px = 0; px < width_; ++px) {
          const double gg = go[py * width_ + px] * t.gy[py] * t.gx[px];
          sx += gg * t.dx[px];
          sy += gg * t.dy[py];
          sr += gg * (t.dx[px] * t.dx[px] + t.dy[py] * t.dy[py]);
          sg += gg;
        }
      }
      gf[0] += amp * t.inv_var * sx;
      gf[1] += amp * t.inv_var * sy;
      gf[2] += amp * inv_w3 * sr;
      gf[3] += f[4] * hue_weight_derivative(f[3], c) * sg;
      gf[4] += hc * sg;
    }
  }
  return gin;
}

// --------------------------------------------------------------- factory

std::unique_ptr<Layer> make_layer(LayerKind kind, std::span<const double> config,
                                  std::vector<Tensor> params) {
  auto need = [&](std::size_t n_config, std::size_t n_params) {
    if (config.size() != n_config || params.size() != n_params) {
      throw ShapeError(std::string("malformed ") + layer_kind_name(kind) + " layer record");
    }
  };
  switch (kind) {
    case LayerKind::kDense:
      need(2, 2);
      return std::make_unique<Dense>(std::move(params[0]), std::move(params[1]));
    case LayerKind::kConv2D:
      need(5, 2);
      return std::make_unique<Conv2D>(std::move(params[0]), std::move(params[1]),
                                      as_size(config[3]), as_size(config[4]));
    case LayerKind::kTransposedConv2D:
      need(5, 2);
      return std::make_unique<TransposedConv2D>(std::move(params[0]), std::move(params[1]),
                                                as_size(config[3]), as_size(config[4]));
    case LayerKind::kNearestUpsample:
      need(1, 0);
      return std::make_unique<NearestUpsample>(as_size(config[0]));
    case LayerKind::kReshape: {
      if (config.empty() || !params.empty()) throw ShapeError("malformed Reshape layer record");
      Shape target;
      for (double d : config) target.push_back(as_size(d));
      return std::make_unique<Reshape>(std::move(target));
    }
    case LayerKind::kLeakyReLU:
      need(1, 0);
      return std::make_unique<LeakyReLU>(config[0]);
    case LayerKind::kTanh:
      need(0, 0);
      return std::make_unique<Tanh>();
    case LayerKind::kSigmoid:
      need(0, 0);
      return std::make_unique<Sigmoid>();
    case LayerKind::kAffine:
      need(0, 2);
      return std::make_unique<Affine>(std::move(params[0]), std::move(params[1]));
    case LayerKind::kAvgPool2D:
      need(1, 0);
      return std::make_unique<AvgPool2D>(as_size(config[0]));
    case LayerKind::kBlobRender:
      need(2, 0);
      return std::make_unique<BlobRender>(as_size(config[0]), as_size(config[1]));
  }
  throw ShapeError("unknown layer kind " + std::to_string(static_cast<int>(kind)));
}

}  // namespace latdis
