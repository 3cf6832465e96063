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

#ifndef LATDIS_LINALG_HPP_
#define LATDIS_LINALG_HPP_

#include <vector>

#include "latdis/rng.hpp"
#include "latdis/tensor.hpp"

// Small dense helpers on row-major [rows, cols] tensors.
namespace latdis::linalg {

Tensor identity(std::size_t n);
Tensor transpose(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);
// a^T b without forming the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor column(const Tensor& a, std::size_t j);
void set_column(Tensor& a, std::size_t j, std::span<const double> v);
// Columns [0, k).
Tensor leading_columns(const Tensor& a, std::size_t k);
// Stacks matrices with equal column count on top of each other.
Tensor vstack(const std::vector<Tensor>& blocks);

// max |A^T A - I|.
double orthonormality_error(const Tensor& a);

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thin QR: returns Q with orthonormal columns spanning the columns of m and
// R's diagonal positive. Modified Gram-Schmidt with one re-orthogonalisation
// pass. Throws RankDeficientError when a column is (numerically) dependent.
Tensor orthonormalize(const Tensor& m);

// Haar-distributed n x n orthogonal matrix.
Tensor random_orthogonal(std::size_t n, Rng& rng);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Tensor vectors;              // columns, matching values
};
SymmetricEigen symmetric_eigen(const Tensor& a);

Tensor inverse(const Tensor& a);

// Cayley map of a skew-symmetric A: (I - A)^-1 (I + A), orthogonal.
Tensor cayley(const Tensor& a);
// Given dL/dQ at Q = cayley(a), returns dL/dA = (I - A)^-T (dL/dQ) (Q + I)^T.
Tensor cayley_backward(const Tensor& a, const Tensor& q, const Tensor& grad_q);

// Flips each column so that its largest-magnitude entry is positive (first
// such entry on ties).
void canonicalize_signs(Tensor& columns);

}  // namespace latdis::linalg

#endif  // LATDIS_LINALG_HPP_
