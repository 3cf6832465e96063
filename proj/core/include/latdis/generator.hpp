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

#ifndef LATDIS_GENERATOR_HPP_
#define LATDIS_GENERATOR_HPP_

#include <optional>
#include <vector>

#include "latdis/network.hpp"
#include "latdis/rng.hpp"

namespace latdis {

inline constexpr std::size_t kMeanLatentSamples = 4096;

// A generator G = synthesis o style. The style network (z -> w) is optional;
// without it the synthesis network reads z directly (plain, ProGAN-like
// generators). Directions, truncation and projections all live in the
// synthesis input space W.
class GeneratorNetwork {
 public:
  GeneratorNetwork() = default;
  // Estimates mean_latent from `mean_samples` style vectors drawn with
  // `mean_rng` when a style network is given; otherwise mean_latent is 0.
  GeneratorNetwork(std::optional<Network> style_net, Network synthesis, double truncation,
                   Rng& mean_rng, std::size_t mean_samples = kMeanLatentSamples);
  // Restores a generator with a known mean latent.
  GeneratorNetwork(std::optional<Network> style_net, Network synthesis, double truncation,
                   Tensor mean_latent);

  const std::optional<Network>& style_net() const { return style_net_; }
  const Network& synthesis() const { return synthesis_; }
  Network& synthesis() { return synthesis_; }
  bool has_style() const { return style_net_.has_value(); }

  std::size_t latent_dim() const { return synthesis_.input_shape().front(); }
  const Shape& image_shape() const { return synthesis_.output_shape(); }
  double truncation() const { return truncation_; }
  const Tensor& mean_latent() const { return mean_latent_; }

  // z batch [n, D] -> w batch [n, D] (identity without a style network).
  Tensor style(const Tensor& z) const;
  // w batch -> image batch, or activations at `tap` of the synthesis network.
  Tensor synthesize(const Tensor& w, std::optional<std::size_t> tap = {}) const;
  // Style vector of z = 0.
  Tensor base_latent() const;

  // Per-block style-input weight matrices, each [rows, D]. For a chain
  // synthesis network this is the Jacobian of its leading linear layers.
  std::vector<Tensor> style_input_weights() const;

  std::uint64_t hash() const;

 private:
  void validate() const;

  std::optional<Network> style_net_;
  Network synthesis_;
  double truncation_ = 1.0;
  Tensor mean_latent_;
};

// w <- mean + psi (w - mean), row-wise. psi must lie in [0, 1].
Tensor truncate(const Tensor& w, const Tensor& mean_latent, double psi);

// n latent codes in W: z ~ N(0, I_D); with a style network w = style(z)
// followed by truncation around mean_latent with scale psi. Without one the
// raw z is returned.
Tensor sample_latents(const GeneratorNetwork& gen, std::size_t n, Rng& rng, double psi);

// StyleGAN-style mapping MLP: n_mlp Dense(D, D) layers each followed by
// LeakyReLU(slope).
Network make_style_mlp(std::size_t latent_dim, std::size_t n_mlp, Rng& rng, double slope = 0.2);

struct PlainGeneratorConfig {
  std::size_t latent_dim = 16;
  std::size_t channels = 3;       // 1 gives grayscale
  std::size_t image_size = 32;    // 4 * 2^n
  std::size_t base_channels = 16;
  bool use_upsample = false;      // NearestUpsample + Conv2D instead of TransposedConv2D
};

// Dense -> Reshape(C, 4, 4) -> [TransposedConv2D | NearestUpsample + Conv2D,
// LeakyReLU] x n -> Conv2D(3x3) -> Sigmoid. Output pixels lie in (0, 1).
Network make_plain_synthesis(const PlainGeneratorConfig& cfg, Rng& rng);

}  // namespace latdis

#endif  // LATDIS_GENERATOR_HPP_
