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

#include "latdis/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace latdis {

Tensor softmax_rows(const Tensor& logits) {
  if (logits.ndim() != 2) throw ShapeError("softmax expects [B, k] logits");
  Tensor p(logits.shape());
  const std::size_t k = logits.dim(1);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    const double* z = logits.ptr() + b * k;
    double* out = p.ptr() + b * k;
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[j] = std::exp(z[j] - zmax);
      sum += out[j];
    }
    for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
  }
  return p;
}

LossResult evaluate_loss(const LossSpec& spec, const Tensor& prediction) {
  if (prediction.ndim() != 2) {
    throw ShapeError("loss expects [B, d] predictions, got " + shape_str(prediction.shape()));
  }
  LossResult r;
  r.grad = Tensor(prediction.shape());
  switch (spec.kind) {
    case LossKind::kMeanSquaredError:
    case LossKind::kMeanAbsoluteError: {
      if (spec.targets.shape() != prediction.shape()) {
        throw ShapeError("loss target shape " + shape_str(spec.targets.shape()) +
                         " does not match prediction " + shape_str(prediction.shape()));
      }
      const double inv_n = 1.0 / static_cast<double>(prediction.size());
      const bool squared = spec.kind == LossKind::kMeanSquaredError;
      double sum = 0.0;
      for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - spec.targets[i];
        if (squared) {
          sum += d * d;
          r.grad[i] = 2.0 * d * inv_n;
        } else {
          sum += std::abs(d);
          r.grad[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;
        }
      }
      r.value = sum * inv_n;
      break;
    }
    case LossKind::kSoftmaxCrossEntropy: {
      const std::size_t b = prediction.dim(0);
      const std::size_t k = prediction.dim(1);
      if (spec.labels.size() != b) {
        throw ShapeError("cross-entropy needs " + std::to_string(b) + " labels, got " +
                         std::to_string(spec.labels.size()));
      }
      const Tensor p = softmax_rows(prediction);
      const double inv_b = 1.0 / static_cast<double>(b);
      double sum = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t y = spec.labels[i];
        if (y >= k) {
          throw std::out_of_range("label " + std::to_string(y) + " out of range for " +
                                  std::to_string(k) + " classes");
        }
        const double* z = prediction.ptr() + i * k;
        const double zmax = *std::max_element(z, z + k);
        double lse = 0.0;
        for (std::size_t j = 0; j < k; ++j) lse += std::exp(z[j] - zmax);
        sum += std::log(lse) + zmax - z[y];
        for (std::size_t j = 0; j < k; ++j) {
          r.grad[i * k + j] = (p[i * k + j] - (j == y ? 1.0 : 0.0)) * inv_b;
        }
      }
      r.value = sum * inv_b;
      break;
    }
  }
  return r;
}

}  // namespace latdis
