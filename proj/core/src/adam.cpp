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

#include "latdis/adam.hpp"

#include <cmath>

namespace latdis {

AdamState::AdamState(std::span<Tensor* const> params, AdamConfig cfg) : config(cfg) {
  for (const Tensor* p : params) {
    first_moment.emplace_back(p->shape());
    second_moment.emplace_back(p->shape());
  }
}

AdamState::AdamState(std::span<const Tensor> params, AdamConfig cfg) : config(cfg) {
  for (const Tensor& p : params) {
    first_moment.emplace_back(p.shape());
    second_moment.emplace_back(p.shape());
  }
}

namespace {

void update_one(Tensor& p, const Tensor& g, Tensor& m, Tensor& v, const AdamConfig& c,
                double corr1, double corr2) {
  if (p.shape() != g.shape() || p.shape() != m.shape()) {
    throw ShapeError("adam_step: parameter " + shape_str(p.shape()) + " / gradient " +
                     shape_str(g.shape()) + " / moment " + shape_str(m.shape()) + " mismatch");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mhat = m[i] / corr1;
    const double vhat = v[i] / corr2;
    p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

template <class Get>
void step_all(std::size_t n, Get get, std::span<const Tensor> grads, AdamState& state) {
  if (grads.size() != n || state.first_moment.size() != n) {
    throw ShapeError("adam_step: " + std::to_string(n) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.first_moment.size()) + " moments");
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(state.config.beta1, t);
  const double corr2 = 1.0 - std::pow(state.config.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    update_one(get(i), grads[i], state.first_moment[i], state.second_moment[i], state.config,
               corr1, corr2);
  }
}

}  // namespace

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  step_all(params.size(), [&](std::size_t i) -> Tensor& { return *params[i]; }, grads, state);
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  step_all(params.size(), [&](std::size_t i) -> Tensor& { return params[i]; }, grads, state);
}

}  // namespace latdis
