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

#include "latdis/power_svd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>

#include "latdis/linalg.hpp"

namespace latdis {

namespace {

using Mat = Eigen::MatrixXd;

// Columns of `m` as rows of a batch tensor.
Tensor to_rows(const Mat& m) {
  Tensor t({static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.rows())});
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      t.at(static_cast<std::size_t>(c), static_cast<std::size_t>(r)) = m(r, c);
    }
  }
  return t;
}

Mat from_rows(const Tensor& t) {
  Mat m(static_cast<Eigen::Index>(t.dim(1)), static_cast<Eigen::Index>(t.dim(0)));
  for (std::size_t r = 0; r < t.dim(0); ++r) {
    for (std::size_t c = 0; c < t.dim(1); ++c) {
      m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = t.at(r, c);
    }
  }
  return m;
}

// J^T J applied to the columns of v.
Mat gram_apply(const LinearOperatorHandle& op, const Mat& v) {
  const Tensor jv = op.apply(to_rows(v));
  if (jv.ndim() != 2 || jv.dim(0) != static_cast<std::size_t>(v.cols()) ||
      jv.dim(1) != op.codomain_dim) {
    throw ShapeError("power_svd: operator returned " + shape_str(jv.shape()));
  }
  const Tensor jtjv = op.apply_transpose(jv);
  if (jtjv.ndim() != 2 || jtjv.dim(1) != op.domain_dim) {
    throw ShapeError("power_svd: adjoint returned " + shape_str(jtjv.shape()));
  }
  return from_rows(jtjv);
}

// Orthonormal basis for span(y) inside the orthogonal complement of the
// (orthonormal) columns of `locked`. Householder QR of [locked, y] keeps
// every output column orthogonal to `locked`, even where y is rank deficient.
Mat complement_basis(const Mat& locked, const Mat& y) {
  const Eigen::Index d = y.rows();
  Mat stacked(d, locked.cols() + y.cols());
  stacked << locked, y;
  const Eigen::HouseholderQR<Mat> qr(stacked);
  const Mat q = qr.householderQ() * Mat::Identity(d, stacked.cols());
  return q.rightCols(y.cols());
}

}  // namespace

LinearOperatorHandle matrix_operator(Tensor a) {
  if (a.ndim() != 2) throw ShapeError("matrix_operator expects a matrix");
  auto m = std::make_shared<const Tensor>(std::move(a));
  LinearOperatorHandle op;
  op.codomain_dim = m->dim(0);
  op.domain_dim = m->dim(1);
  // Rows of x are vectors: (A x_i)^T = x_i^T A^T.
  op.apply = [m](const Tensor& x) { return linalg::matmul(x, linalg::transpose(*m)); };
  op.apply_transpose = [m](const Tensor& y) { return linalg::matmul(y, *m); };
  return op;
}

LinearOperatorHandle jacobian_operator(const GeneratorNetwork& gen, const Tensor& w0,
                                       std::size_t tap) {
  if (tap > gen.synthesis().depth()) {
    throw std::out_of_range("jacobian_operator: tap " + std::to_string(tap) + " beyond depth " +
                            std::to_string(gen.synthesis().depth()));
  }
  if (w0.size() != gen.latent_dim()) {
    throw ShapeError("jacobian_operator: base point must have " +
                     std::to_string(gen.latent_dim()) + " entries");
  }
  auto prefix = std::make_shared<const Network>(gen.synthesis().prefix(tap));
  auto base = std::make_shared<const Tensor>(w0.reshaped({w0.size()}));
  const std::size_t d = gen.latent_dim();
  const Shape out_shape = prefix->output_shape();
  const std::size_t m = numel(out_shape);

  auto replicate = [base, d](std::size_t b) {
    Tensor rows({b, d});
    for (std::size_t i = 0; i < b; ++i) {
      std::copy(base->data().begin(), base->data().end(), rows.row(i).begin());
    }
    return rows;
  };
  auto batched = [](const Shape& sample, std::size_t b) {
    Shape s{b};
    s.insert(s.end(), sample.begin(), sample.end());
    return s;
  };

  LinearOperatorHandle op;
  op.domain_dim = d;
  op.codomain_dim = m;
  op.apply = [=](const Tensor& v) {
    const std::size_t b = v.dim(0);
    return prefix->jvp_batch(replicate(b), v, prefix->depth()).reshaped({b, m});
  };
  op.apply_transpose = [=](const Tensor& u) {
    const std::size_t b = u.dim(0);
    const auto trace = prefix->trace(replicate(b));
    return prefix->backward(trace, u.reshaped(batched(out_shape, b)), nullptr, true);
  };
  return op;
}

PowerSvdResult power_svd(const LinearOperatorHandle& op, std::size_t k, Rng& rng,
                         const PowerSvdOptions& options) {
  const std::size_t d = op.domain_dim;
  if (k == 0 || k > d) {
    throw std::invalid_argument("power_svd: k = " + std::to_string(k) + " must lie in [1, " +
                                std::to_string(d) + "]");
  }
  if (!(options.tol > 0.0)) throw std::invalid_argument("power_svd: tol must be positive");
  if (options.max_iter == 0) throw std::invalid_argument("power_svd: max_iter must be >= 1");

  const auto di = static_cast<Eigen::Index>(d);
  Mat locked(di, 0);
  std::vector<double> locked_theta;
  std::vector<double> locked_res;

  auto active_size = [&] {
    const std::size_t want = k - locked_theta.size() + options.oversample;
    return static_cast<Eigen::Index>(std::min(d - locked_theta.size(), want));
  };

  Mat start = from_rows(rng.normal_tensor({static_cast<std::size_t>(active_size()), d}));
  Mat v = complement_basis(locked, start);
  double theta_max = 0.0;
  std::size_t iter = 0;
  Mat ritz_v;
  Eigen::VectorXd theta;
  std::vector<double> res;

  while (true) {
    ++iter;
    const Mat y_raw = gram_apply(op, v);
    Mat y = y_raw;
    if (locked.cols() > 0) y -= locked * (locked.transpose() * y);
    // Rayleigh-Ritz on the active block, ordered by descending Ritz value.
    Mat h = v.transpose() * y;
    h = 0.5 * (h + h.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Mat> eig(h);
    const Eigen::Index b = v.cols();
    Mat u = eig.eigenvectors().rowwise().reverse();
    theta = eig.eigenvalues().reverse();
    ritz_v = v * u;
    const Mat ritz_y = y * u;
    // Residuals use the undeflated product so they certify the full operator.
    const Mat ritz_y_raw = y_raw * u;
    theta_max = std::max(theta_max, theta(0));
    const double floor = 1e-4 * theta_max;

    res.assign(static_cast<std::size_t>(b), 0.0);
    for (Eigen::Index i = 0; i < b; ++i) {
      res[static_cast<std::size_t>(i)] = (ritz_y_raw.col(i) - theta(i) * ritz_v.col(i)).norm();
    }
    // Accept leading converged pairs.
    Eigen::Index accepted = 0;
    while (accepted < b && locked_theta.size() < k) {
      const double t = std::max(theta(accepted), 0.0);
      if (!(res[static_cast<std::size_t>(accepted)] <= options.tol * std::max(t, floor))) break;
      locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
      locked.col(locked.cols() - 1) = ritz_v.col(accepted);
      locked_theta.push_back(t);
      locked_res.push_back(res[static_cast<std::size_t>(accepted)]);
      ++accepted;
    }
    if (locked_theta.size() == k) break;
    if (iter >= options.max_iter) break;

    const Eigen::Index next = active_size();
    Mat rest = ritz_y.rightCols(b - accepted);
    if (rest.cols() > next) rest.conservativeResize(Eigen::NoChange, next);
    v = complement_basis(locked, rest);
  }

  PowerSvdResult out;
  out.iterations = iter;
  out.converged = locked_theta.size() == k;
  Mat vecs = locked;
  std::vector<double> thetas = locked_theta;
  std::vector<double> residuals = locked_res;
  if (!out.converged) {
    const Eigen::Index missing = static_cast<Eigen::Index>(k - locked_theta.size());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < missing; ++i) worst = std::max(worst, res[static_cast<std::size_t>(i)]);
    if (!options.accept_unconverged) {
      throw PowerSvdError("power_svd: " + std::to_string(missing) + " of " + std::to_string(k) +
                              " singular pairs did not converge after " +
                              std::to_string(options.max_iter) +
                              " iterations; worst residual " + std::to_string(worst),
                          worst);
    }
    vecs.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < missing; ++i) {
      vecs.col(locked.cols() + i) = ritz_v.col(i);
      thetas.push_back(std::max(theta(i), 0.0));
      residuals.push_back(res[static_cast<std::size_t>(i)]);
    }
  }

  // Deflated pairs can come out of order when values are close.
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return thetas[a] > thetas[b]; });
  out.vectors = Tensor({d, k});
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t src = order[j];
    out.values.push_back(std::sqrt(thetas[src]));
    out.residuals.push_back(residuals[src]);
    for (std::size_t r = 0; r < d; ++r) {
      out.vectors.at(r, j) = vecs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(src));
    }
  }
  linalg::canonicalize_signs(out.vectors);
  return out;
}

}  // namespace latdis
