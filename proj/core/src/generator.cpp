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

#include "latdis/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latdis {

GeneratorNetwork::GeneratorNetwork(std::optional<Network> style_net, Network synthesis,
                                   double truncation, Rng& mean_rng, std::size_t mean_samples)
    : style_net_(std::move(style_net)), synthesis_(std::move(synthesis)), truncation_(truncation) {
  validate();
  mean_latent_ = Tensor({latent_dim()});
  if (style_net_ && mean_samples > 0) {
    const Tensor z = mean_rng.normal_tensor({mean_samples, latent_dim()});
    const Tensor w = style_net_->forward_batch(z);
    for (std::size_t i = 0; i < mean_samples; ++i) {
      for (std::size_t d = 0; d < latent_dim(); ++d) mean_latent_[d] += w.at(i, d);
    }
    for (double& v : mean_latent_.data()) v /= static_cast<double>(mean_samples);
  }
}

GeneratorNetwork::GeneratorNetwork(std::optional<Network> style_net, Network synthesis,
                                   double truncation, Tensor mean_latent)
    : style_net_(std::move(style_net)),
      synthesis_(std::move(synthesis)),
      truncation_(truncation),
      mean_latent_(std::move(mean_latent)) {
  validate();
  if (mean_latent_.shape() != Shape{latent_dim()}) {
    throw ShapeError("mean latent must be [" + std::to_string(latent_dim()) + "]");
  }
  mean_latent_.require_finite("mean latent");
}

void GeneratorNetwork::validate() const {
  if (synthesis_.input_shape().size() != 1) {
    throw ShapeError("synthesis network must take a latent vector, got " +
                     shape_str(synthesis_.input_shape()));
  }
  if (style_net_) {
    if (style_net_->input_shape() != Shape{latent_dim()} ||
        style_net_->output_shape() != Shape{latent_dim()}) {
      throw ShapeError("style network must map [" + std::to_string(latent_dim()) + "] to [" +
                       std::to_string(latent_dim()) + "]");
    }
  }
  if (!(truncation_ > 0.0 && truncation_ <= 1.0)) {
    throw std::invalid_argument("truncation must lie in (0, 1]");
  }
}

Tensor GeneratorNetwork::style(const Tensor& z) const {
  if (!style_net_) return z;
  return style_net_->forward_batch(z);
}

Tensor GeneratorNetwork::synthesize(const Tensor& w, std::optional<std::size_t> tap) const {
  return synthesis_.forward_batch(w, tap.value_or(synthesis_.depth()));
}

Tensor GeneratorNetwork::base_latent() const {
  const Tensor w = style(Tensor({1, latent_dim()}));
  return w.reshaped({latent_dim()});
}

std::vector<Tensor> GeneratorNetwork::style_input_weights() const {
  std::size_t end = 0;
  bool has_weight = false;
  while (end < synthesis_.depth() && synthesis_.layer(end).is_linear()) {
    has_weight = !synthesis_.layer(end).parameters().empty();
    ++end;
    if (has_weight) break;
  }
  if (!has_weight) {
    throw std::invalid_argument(
        "first synthesis layer is not a linear layer with a weight; no closed-form matrix");
  }
  const std::size_t d = latent_dim();
  const std::size_t rows = numel(synthesis_.shape_at(end));
  // The prefix is linear, so its Jacobian at 0 is the weight itself (bias
  // terms drop out of the tangent map).
  Tensor basis({d, d});
  for (std::size_t i = 0; i < d; ++i) basis.at(i, i) = 1.0;
  const Tensor cols = synthesis_.jvp_batch(Tensor({d, d}), basis, end).reshaped({d, rows});
  Tensor a({rows, d});
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t r = 0; r < rows; ++r) a.at(r, i) = cols.at(i, r);
  }
  return {a};
}

std::uint64_t GeneratorNetwork::hash() const {
  std::uint64_t h = synthesis_.hash();
  if (style_net_) h ^= style_net_->hash() * 0x9e3779b97f4a7c15ULL;
  h = tensor_hash(mean_latent_, h);
  return tensor_hash(Tensor::vector({truncation_}), h);
}

Tensor truncate(const Tensor& w, const Tensor& mean_latent, double psi) {
  if (!(psi >= 0.0 && psi <= 1.0)) throw std::invalid_argument("truncation psi must lie in [0, 1]");
  if (w.ndim() != 2 || w.dim(1) != mean_latent.size()) {
    throw ShapeError("truncate: latent batch " + shape_str(w.shape()) + " vs mean " +
                     shape_str(mean_latent.shape()));
  }
  if (psi == 1.0) return w;
  Tensor out(w.shape());
  const std::size_t d = w.dim(1);
  for (std::size_t i = 0; i < w.dim(0); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.at(i, j) = mean_latent[j] + psi * (w.at(i, j) - mean_latent[j]);
    }
  }
  return out;
}

Tensor sample_latents(const GeneratorNetwork& gen, std::size_t n, Rng& rng, double psi) {
  if (n == 0) throw std::invalid_argument("sample_latents: n must be at least 1");
  const Tensor z = rng.normal_tensor({n, gen.latent_dim()});
  if (!gen.has_style()) return z;
  return truncate(gen.style(z), gen.mean_latent(), psi);
}

Network make_style_mlp(std::size_t latent_dim, std::size_t n_mlp, Rng& rng, double slope) {
  Network net({latent_dim});
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  for (std::size_t i = 0; i < n_mlp; ++i) {
    net.add(Dense::random(latent_dim, latent_dim, rng, gain));
    net.add(LeakyReLU(slope));
  }
  return net;
}

Network make_plain_synthesis(const PlainGeneratorConfig& cfg, Rng& rng) {
  std::size_t stages = 0;
  for (std::size_t s = 4; s < cfg.image_size; s *= 2) ++stages;
  if ((std::size_t{4} << stages) != cfg.image_size) {
    throw std::invalid_argument("plain generator image size must be 4 * 2^n");
  }
  const std::size_t c0 = cfg.base_channels;
  Network net({cfg.latent_dim});
  net.add(Dense::random(cfg.latent_dim, c0 * 16, rng));
  net.add(Reshape({c0, 4, 4}));
  net.add(LeakyReLU(0.2));
  std::size_t c = c0;
  for (std::size_t s = 0; s < stages; ++s) {
    const std::size_t next = std::max<std::size_t>(4, c / 2);
    if (cfg.use_upsample) {
      net.add(NearestUpsample(2));
      net.add(Conv2D::random(c, next, 3, 1, 1, rng, std::sqrt(2.0)));
    } else {
      net.add(TransposedConv2D::random(c, next, rng, 4, 2, 1, std::sqrt(2.0)));
    }
    net.add(LeakyReLU(0.2));
    c = next;
  }
  net.add(Conv2D::random(c, cfg.channels, 3, 1, 1, rng));
  net.add(Sigmoid());
  return net;
}

}  // namespace latdis
