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

#ifndef LATDIS_LOSS_HPP_
#define LATDIS_LOSS_HPP_

#include <cstddef>
#include <vector>

#include "latdis/tensor.hpp"

namespace latdis {

enum class LossKind { kMeanSquaredError, kSoftmaxCrossEntropy, kMeanAbsoluteError };

// MSE and MAE average over every element of the [B, d] prediction; softmax
// cross-entropy averages -log p(label) over the batch.
struct LossSpec {
  LossKind kind = LossKind::kMeanSquaredError;
  Tensor targets;                    // MSE / MAE
  std::vector<std::size_t> labels;   // cross-entropy

  static LossSpec mse(Tensor targets) { return {LossKind::kMeanSquaredError, std::move(targets), {}}; }
  static LossSpec mae(Tensor targets) { return {LossKind::kMeanAbsoluteError, std::move(targets), {}}; }
  static LossSpec cross_entropy(std::vector<std::size_t> labels) {
    return {LossKind::kSoftmaxCrossEntropy, {}, std::move(labels)};
  }
};

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d value / d prediction
};

LossResult evaluate_loss(const LossSpec& spec, const Tensor& prediction);

// Row-wise softmax of a [B, k] tensor.
Tensor softmax_rows(const Tensor& logits);

}  // namespace latdis

#endif  // LATDIS_LOSS_HPP_
