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

#ifndef LATDIS_ADAM_HPP_
#define LATDIS_ADAM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "latdis/tensor.hpp"

namespace latdis {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  // Moments shaped like `params`.
  AdamState(std::span<Tensor* const> params, AdamConfig config);
  AdamState(std::span<const Tensor> params, AdamConfig config);

  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace latdis

#endif  // LATDIS_ADAM_HPP_
