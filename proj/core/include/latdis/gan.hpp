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

#ifndef LATDIS_GAN_HPP_
#define LATDIS_GAN_HPP_

#include <vector>

#include "latdis/blob_world.hpp"
#include "latdis/generator.hpp"

namespace latdis {

struct GanConfig {
  PlainGeneratorConfig generator;
  bool style = true;          // prepend a mapping MLP
  std::size_t n_mlp = 3;
  std::size_t disc_channels = 16;
  std::size_t iterations = 2000;
  std::size_t batch_size = 32;
  double lr = 0.002;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double r1 = 10.0;
  std::size_t d_reg_every = 16;  // lazy R1, scaled by the interval
  double truncation = 0.8;

  void validate() const;
};

// Conv(4x4, stride 2) + LeakyReLU blocks down to 4x4, then Dense -> 1 logit.
Network make_discriminator(const Shape& image_shape, std::size_t channels, Rng& rng);

struct GanResult {
  GeneratorNetwork generator;
  Network discriminator;
  std::vector<double> d_loss;
  std::vector<double> g_loss;
};

// Non-saturating GAN objective with an R1 penalty (r1 / 2) E |grad_x D(x)|^2
// on real images. The penalty's parameter gradient, a mixed second
// derivative, is taken as a central difference of parameter gradients along
// grad_x D. Throws std::runtime_error when a loss turns non-finite.
GanResult train_gan(const Tensor& images, const GanConfig& cfg, Rng& rng);

}  // namespace latdis

#endif  // LATDIS_GAN_HPP_
