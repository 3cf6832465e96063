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

// Dense row-major matrix kernels shared by the layers. Every output element
// is reduced in a fixed order, so results depend only on the inputs and the
// binary.

#ifndef LATDIS_SRC_KERNELS_HPP_
#define LATDIS_SRC_KERNELS_HPP_

#include <cstddef>

namespace latdis::kernels {

// C[m][n] += sum_k A[m][k] * B[n][k];  A: MxK, B: NxK, C: MxN.
inline void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m_rows,
                        std::size_t n_rows, std::size_t k_len) {
  std::size_t m = 0;
  for (; m + 4 <= m_rows; m += 4) {
    const double* a0 = a + m * k_len;
    const double* a1 = a0 + k_len;
    const double* a2 = a1 + k_len;
    const double* a3 = a2 + k_len;
    for (std::size_t n = 0; n < n_rows; ++n) {
      const double* bn = b + n * k_len;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
      for (std::size_t k = 0; k < k_len; ++k) {
        s0 += a0[k] * bn[k];
        s1 += a1[k] * bn[k];
        s2 += a2[k] * bn[k];
        s3 += a3[k] * bn[k];
      }
      c[m * n_rows + n] += s0;
      c[(m + 1) * n_rows + n] += s1;
      c[(m + 2) * n_rows + n] += s2;
      c[(m + 3) * n_rows + n] += s3;
    }
  }
  for (; m < m_rows; ++m) {
    const double* am = a + m * k_len;
    for (std::size_t n = 0; n < n_rows; ++n) {
      const double* bn = b + n * k_len;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t k = 0; k < k_len; ++k) s += am[k] * bn[k];
      c[m * n_rows + n] += s;
    }
  }
}

// C[m][:] += sum_k A[m][k] * B[k][:];  A: MxK, B: KxN, C: MxN.
inline void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t m_rows,
                        std::size_t k_len, std::size_t n_cols) {
  for (std::size_t m = 0; m < m_rows; ++m) {
    double* cm = c + m * n_cols;
    const double* am = a + m * k_len;
    for (std::size_t k = 0; k < k_len; ++k) {
      const double s = am[k];
      if (s == 0.0) continue;
      const double* bk = b + k * n_cols;
#pragma omp simd
      for (std::size_t n = 0; n < n_cols; ++n) cm[n] += s * bk[n];
    }
  }
}

// C[m][:] += sum_k A[k][m] * B[k][:];  A: KxM, B: KxN, C: MxN.
// Accumulation over k is sequential, which is what batch sums rely on.
inline void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t k_len,
                        std::size_t m_rows, std::size_t n_cols) {
  for (std::size_t k = 0; k < k_len; ++k) {
    const double* ak = a + k * m_rows;
    const double* bk = b + k * n_cols;
    for (std::size_t m = 0; m < m_rows; ++m) {
      const double s = ak[m];
      if (s == 0.0) continue;
      double* cm = c + m * n_cols;
#pragma omp simd
      for (std::size_t n = 0; n < n_cols; ++n) cm[n] += s * bk[n];
    }
  }
}

}  // namespace latdis::kernels

#endif  // LATDIS_SRC_KERNELS_HPP_
