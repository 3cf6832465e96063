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

#include "latdis/gan.hpp"

#include <cmath>
#include <stdexcept>

#include "latdis/adam.hpp"

namespace latdis {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor sample_rows(const Tensor& src, std::size_t b, Rng& rng) {
  Shape s = src.shape();
  s[0] = b;
  Tensor out(s);
  const std::size_t per = src.size() / src.dim(0);
  for (std::size_t i = 0; i < b; ++i) {
    const auto r = static_cast<std::size_t>(rng.below(src.dim(0)));
    std::copy(src.ptr() + r * per, src.ptr() + (r + 1) * per, out.ptr() + i * per);
  }
  return out;
}

}  // namespace

void GanConfig::validate() const {
  if (iterations == 0 || iterations > 50000) throw std::invalid_argument("gan iterations must lie in [1, 50000]");
  if (batch_size == 0) throw std::invalid_argument("gan batch_size must be >= 1");
  if (generator.image_size > 32) throw std::invalid_argument("gan image size is limited to 32");
  if (!(lr > 0.0)) throw std::invalid_argument("gan lr must be positive");
  if (!(r1 >= 0.0)) throw std::invalid_argument("gan r1 must be non-negative");
  if (d_reg_every == 0) throw std::invalid_argument("gan d_reg_every must be >= 1");
  if (!(truncation > 0.0 && truncation <= 1.0)) throw std::invalid_argument("gan truncation must lie in (0, 1]");
}

Network make_discriminator(const Shape& image_shape, std::size_t channels, Rng& rng) {
  if (image_shape.size() != 3 || image_shape[1] != image_shape[2] || image_shape[1] < 8) {
    throw ShapeError("discriminator needs square [C, H, H] images with H >= 8");
  }
  const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
  Network net(image_shape);
  std::size_t c = image_shape[0], side = image_shape[1], width = channels;
  while (side > 4) {
    net.add(Conv2D::random(c, width, 4, 2, 1, rng, gain));
    net.add(LeakyReLU(0.2));
    c = width;
    width *= 2;
    side /= 2;
  }
  const std::size_t flat = numel(net.output_shape());
  net.add(Reshape({flat}));
  net.add(Dense::random(flat, 1, rng));
  return net;
}

GanResult train_gan(const Tensor& images, const GanConfig& cfg, Rng& rng) {
  cfg.validate();
  if (images.ndim() != 4 || images.dim(0) == 0) throw ShapeError("train_gan expects [n, C, H, W] images");
  PlainGeneratorConfig gcfg = cfg.generator;
  gcfg.channels = images.dim(1);
  gcfg.image_size = images.dim(2);
  const std::size_t d = gcfg.latent_dim, b = cfg.batch_size;

  Rng init = rng.substream(1);
  Network synth = make_plain_synthesis(gcfg, init);
  std::optional<Network> style;
  if (cfg.style) style = make_style_mlp(d, cfg.n_mlp, init);
  const Shape sample(images.shape().begin() + 1, images.shape().end());
  if (synth.output_shape() != sample) {
    throw ShapeError("generator output " + shape_str(synth.output_shape()) + " does not match data " +
                     shape_str(sample));
  }
  Network disc = make_discriminator(sample, cfg.disc_channels, init);

  const AdamConfig acfg{.lr = cfg.lr, .beta1 = cfg.beta1, .beta2 = cfg.beta2, .eps = 1e-8};
  auto gen_params = [&] {
    std::vector<Tensor*> p = synth.parameters();
    if (style) {
      for (Tensor* t : style->parameters()) p.push_back(t);
    }
    return p;
  };
  AdamState g_state(std::span<Tensor* const>(gen_params()), acfg);
  AdamState d_state(std::span<Tensor* const>(disc.parameters()), acfg);
  GanResult out;
  const double inv_b = 1.0 / static_cast<double>(b);
  Shape logit_shape{b, 1};

  auto generate = [&](const Tensor& z, std::vector<Tensor>* style_trace, std::vector<Tensor>* synth_trace) {
    Tensor w = z;
    if (style) {
      *style_trace = style->trace(z);
      w = style_trace->back();
    }
    *synth_trace = synth.trace(w);
    return synth_trace->back();
  };

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    // Discriminator step.
    {
      const Tensor real = sample_rows(images, b, rng);
      std::vector<Tensor> st, gt;
      const Tensor fake = generate(rng.normal_tensor({b, d}), &st, &gt);
      const auto rt = disc.trace(real);
      const auto ft = disc.trace(fake);
      Tensor gr(logit_shape), gf(logit_shape);
      double loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const double lr_ = rt.back()[i], lf = ft.back()[i];
        loss += (softplus(-lr_) + softplus(lf)) * inv_b;
        gr[i] = -sigmoid(-lr_) * inv_b;
        gf[i] = sigmoid(lf) * inv_b;
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train_gan: discriminator loss diverged at iteration " + std::to_string(it));
      }
      std::vector<Tensor> grads = disc.zero_gradients();
      disc.backward(rt, gr, &grads, false);
      disc.backward(ft, gf, &grads, false);

      if (cfg.r1 > 0.0 && it % cfg.d_reg_every == 0) {
        // v_i = grad_x D(x_i); penalty gradient r1 * d/dtheta <grad_x D(x_i), v_i> / b.
        Tensor ones = Tensor::filled(logit_shape, 1.0);
        const Tensor v = disc.backward(rt, ones, nullptr, true);
        const std::size_t per = v.size() / b;
        Tensor plus(real.shape()), minus(real.shape());
        Tensor wplus(logit_shape), wminus(logit_shape);
        const double scale = cfg.r1 * static_cast<double>(cfg.d_reg_every) * inv_b;
        for (std::size_t i = 0; i < b; ++i) {
          double nv = 0.0;
          for (std::size_t p = 0; p < per; ++p) nv += v[i * per + p] * v[i * per + p];
          nv = std::sqrt(nv);
          const double h = nv > 0.0 ? 1e-3 / nv : 0.0;
          for (std::size_t p = 0; p < per; ++p) {
            plus[i * per + p] = real[i * per + p] + h * v[i * per + p];
            minus[i * per + p] = real[i * per + p] - h * v[i * per + p];
          }
          const double c = h > 0.0 ? 0.5 * scale / h : 0.0;
          wplus[i] = c;
          wminus[i] = -c;
        }
        disc.backward(disc.trace(plus), wplus, &grads, false);
        disc.backward(disc.trace(minus), wminus, &grads, false);
      }
      adam_step(std::span<Tensor* const>(disc.parameters()), grads, d_state);
      out.d_loss.push_back(loss);
    }
    // Generator step.
    {
      std::vector<Tensor> st, gt;
      const Tensor fake = generate(rng.normal_tensor({b, d}), &st, &gt);
      const auto ft = disc.trace(fake);
      Tensor gf(logit_shape);
      double loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const double lf = ft.back()[i];
        loss += softplus(-lf) * inv_b;
        gf[i] = -sigmoid(-lf) * inv_b;
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train_gan: generator loss diverged at iteration " + std::to_string(it));
      }
      const Tensor gx = disc.backward(ft, gf, nullptr, true);
      std::vector<Tensor> sgrads = synth.zero_gradients();
      const Tensor gw = synth.backward(gt, gx, &sgrads, style.has_value());
      std::vector<Tensor> all = std::move(sgrads);
      if (style) {
        std::vector<Tensor> mgrads = style->zero_gradients();
        style->backward(st, gw, &mgrads, false);
        for (Tensor& t : mgrads) all.push_back(std::move(t));
      }
      adam_step(std::span<Tensor* const>(gen_params()), all, g_state);
      out.g_loss.push_back(loss);
    }
  }

  Rng mean_rng = rng.substream(2);
  out.generator = GeneratorNetwork(std::move(style), std::move(synth), cfg.truncation, mean_rng);
  out.discriminator = std::move(disc);
  return out;
}

}  // namespace latdis
