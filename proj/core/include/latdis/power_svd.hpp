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

#ifndef LATDIS_POWER_SVD_HPP_
#define LATDIS_POWER_SVD_HPP_

#include <functional>
#include <stdexcept>
#include <vector>

#include "latdis/generator.hpp"
#include "latdis/rng.hpp"
#include "latdis/tensor.hpp"

namespace latdis {

// A linear map R^D -> R^M known only through products. Both callbacks act on
// row batches: apply takes [b, D] and returns [b, M], apply_transpose takes
// [b, M] and returns [b, D].
struct LinearOperatorHandle {
  std::size_t domain_dim = 0;
  std::size_t codomain_dim = 0;
  std::function<Tensor(const Tensor&)> apply;
  std::function<Tensor(const Tensor&)> apply_transpose;
};

// Wraps an explicit [M, D] matrix.
LinearOperatorHandle matrix_operator(Tensor a);

// Jacobian of the synthesis prefix ending at `tap`, evaluated at w0, applied
// through jvp/vjp. The generator is copied into the handle.
LinearOperatorHandle jacobian_operator(const GeneratorNetwork& gen, const Tensor& w0,
                                       std::size_t tap);

struct PowerSvdOptions {
  double tol = 1e-9;
  std::size_t max_iter = 2000;
  // Extra search vectors carried alongside the k wanted ones.
  std::size_t oversample = 8;
  // Return the last iterate with converged = false instead of throwing.
  bool accept_unconverged = false;
};

struct PowerSvdResult {
  std::vector<double> values;     // singular values, descending
  Tensor vectors;                 // [D, k] right singular vectors
  std::vector<double> residuals;  // |J^T J v - s^2 v| per pair
  std::size_t iterations = 0;
  bool converged = true;
};

class PowerSvdError : public std::runtime_error {
 public:
  PowerSvdError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Top-k singular triplets of `op` by block power iteration on J^T J.
//
// Each sweep multiplies the active block by J^T J, projects out the vectors
// already accepted (deflation), and rotates the block onto its Ritz vectors.
// A Ritz pair (t, v) is accepted once |J^T J v - t v| <= tol * max(t, t_floor)
// with t_floor = 1e-4 * t_max: pairs far below the top of the spectrum (and
// exact zeros of rank-deficient operators) are held to an absolute residual
// that double rounding can actually reach. Vectors follow the
// largest-component-positive sign rule.
PowerSvdResult power_svd(const LinearOperatorHandle& op, std::size_t k, Rng& rng,
                         const PowerSvdOptions& options = {});

}  // namespace latdis

#endif  // LATDIS_POWER_SVD_HPP_
