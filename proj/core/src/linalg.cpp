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

#include "latdis/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace latdis::linalg {

namespace {

void require_matrix(const Tensor& a, const char* who) {
  if (a.ndim() != 2) throw ShapeError(std::string(who) + " expects a matrix, got " + shape_str(a.shape()));
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Tensor& a) {
  return Eigen::Map<const RowMajor>(a.ptr(), static_cast<Eigen::Index>(a.dim(0)),
                                    static_cast<Eigen::Index>(a.dim(1)));
}

}  // namespace

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t r = 0; r < a.dim(0); ++r) {
    for (std::size_t c = 0; c < a.dim(1); ++c) t.at(c, r) = a.at(r, c);
  }
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor c({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a.at(i, p);
      for (std::size_t j = 0; j < m; ++j) c.at(i, j) += s * b.at(p, j);
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("matmul_tn: " + shape_str(a.shape()) + "^T x " + shape_str(b.shape()));
  }
  const std::size_t k = a.dim(0), n = a.dim(1), m = b.dim(1);
  Tensor c({n, m});
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = a.at(p, i);
      for (std::size_t j = 0; j < m; ++j) c.at(i, j) += s * b.at(p, j);
    }
  }
  return c;
}

Tensor column(const Tensor& a, std::size_t j) {
  require_matrix(a, "column");
  Tensor v({a.dim(0)});
  for (std::size_t r = 0; r < a.dim(0); ++r) v[r] = a.at(r, j);
  return v;
}

void set_column(Tensor& a, std::size_t j, std::span<const double> v) {
  for (std::size_t r = 0; r < a.dim(0); ++r) a.at(r, j) = v[r];
}

Tensor leading_columns(const Tensor& a, std::size_t k) {
  require_matrix(a, "leading_columns");
  if (k == 0 || k > a.dim(1)) throw ShapeError("leading_columns: k out of range");
  Tensor t({a.dim(0), k});
  for (std::size_t r = 0; r < a.dim(0); ++r) {
    for (std::size_t c = 0; c < k; ++c) t.at(r, c) = a.at(r, c);
  }
  return t;
}

Tensor vstack(const std::vector<Tensor>& blocks) {
  if (blocks.empty()) throw ShapeError("vstack of nothing");
  const std::size_t cols = blocks.front().dim(1);
  std::size_t rows = 0;
  for (const Tensor& b : blocks) {
    require_matrix(b, "vstack");
    if (b.dim(1) != cols) throw ShapeError("vstack: column counts differ");
    rows += b.dim(0);
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const Tensor& b : blocks) {
    std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += b.size();
  }
  return out;
}

double orthonormality_error(const Tensor& a) {
  const Tensor g = matmul_tn(a, a);
  double err = 0.0;
  for (std::size_t i = 0; i < g.dim(0); ++i) {
    for (std::size_t j = 0; j < g.dim(1); ++j) {
      err = std::max(err, std::abs(g.at(i, j) - (i == j ? 1.0 : 0.0)));
    }
  }
  return err;
}

Tensor orthonormalize(const Tensor& m) {
  require_matrix(m, "orthonormalize");
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  if (cols > rows) throw RankDeficientError("orthonormalize: more columns than rows");
  Tensor q({rows, cols});
  std::vector<double> v(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    double original = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      v[r] = m.at(r, j);
      original += v[r] * v[r];
    }
    original = std::sqrt(original);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        double proj = 0.0;
        for (std::size_t r = 0; r < rows; ++r) proj += q.at(r, i) * v[r];
        for (std::size_t r = 0; r < rows; ++r) v[r] -= proj * q.at(r, i);
      }
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (!(n > 1e-12 * original) || original == 0.0) {
      throw RankDeficientError("orthonormalize: column " + std::to_string(j) +
                               " is linearly dependent on earlier columns");
    }
    for (std::size_t r = 0; r < rows; ++r) q.at(r, j) = v[r] / n;
  }
  return q;
}

Tensor random_orthogonal(std::size_t n, Rng& rng) {
  // QR of a Gaussian matrix with positive R diagonal is Haar distributed.
  return orthonormalize(rng.normal_tensor({n, n}));
}

SymmetricEigen symmetric_eigen(const Tensor& a) {
  require_matrix(a, "symmetric_eigen");
  if (a.dim(0) != a.dim(1)) throw ShapeError("symmetric_eigen needs a square matrix");
  const std::size_t n = a.dim(0);
  Eigen::MatrixXd sym = view(a);
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
  // Eigen returns ascending order.
  SymmetricEigen out;
  out.vectors = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(n - 1 - i);
    out.values.push_back(solver.eigenvalues()(src));
    for (std::size_t r = 0; r < n; ++r) {
      out.vectors.at(r, i) = solver.eigenvectors()(static_cast<Eigen::Index>(r), src);
    }
  }
  return out;
}

Tensor inverse(const Tensor& a) {
  require_matrix(a, "inverse");
  if (a.dim(0) != a.dim(1)) throw ShapeError("inverse needs a square matrix");
  const Eigen::MatrixXd m = view(a);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::MatrixXd inv = lu.inverse();
  Tensor out(a.shape());
  for (std::size_t r = 0; r < a.dim(0); ++r) {
    for (std::size_t c = 0; c < a.dim(1); ++c) {
      out.at(r, c) = inv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  out.require_finite("inverse");
  return out;
}

Tensor cayley(const Tensor& a) {
  require_matrix(a, "cayley");
  const std::size_t n = a.dim(0);
  Tensor minus(a.shape()), plus(a.shape());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double id = r == c ? 1.0 : 0.0;
      minus.at(r, c) = id - a.at(r, c);
      plus.at(r, c) = id + a.at(r, c);
    }
  }
  return matmul(inverse(minus), plus);
}

Tensor cayley_backward(const Tensor& a, const Tensor& q, const Tensor& grad_q) {
  const std::size_t n = a.dim(0);
  Tensor minus(a.shape()), q_plus(q);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) minus.at(r, c) = (r == c ? 1.0 : 0.0) - a.at(r, c);
    q_plus.at(r, r) += 1.0;
  }
  return matmul(matmul_tn(inverse(minus), grad_q), transpose(q_plus));
}

void canonicalize_signs(Tensor& columns) {
  require_matrix(columns, "canonicalize_signs");
  for (std::size_t c = 0; c < columns.dim(1); ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < columns.dim(0); ++r) {
      if (std::abs(columns.at(r, c)) > std::abs(columns.at(best, c))) best = r;
    }
    if (columns.at(best, c) < 0.0) {
      for (std::size_t r = 0; r < columns.dim(0); ++r) columns.at(r, c) = -columns.at(r, c);
    }
  }
}

}  // namespace latdis::linalg
