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

// Reference implementations used only by tests. Each one takes a different
// code path from the library routine it checks.

#ifndef LATDIS_TESTS_ORACLES_HPP_
#define LATDIS_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "latdis/blob_world.hpp"
#include "latdis/layers.hpp"
#include "latdis/rng.hpp"
#include "latdis/tensor.hpp"

namespace oracle {

using latdis::Layer;
using latdis::Rng;
using latdis::Shape;
using latdis::Tensor;

inline double inner(const Tensor& a, const Tensor& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

inline Tensor axpy(const Tensor& x, double h, const Tensor& u) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * u[i];
  return out;
}

inline double diff_norm(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double norm(const Tensor& a) { return std::sqrt(inner(a, a)); }

// Worst errors seen over a set of probes.
struct ProbeStats {
  double jvp_rel = 0.0;       // |fd(J u) - J u| / |J u|
  double vjp_rel = 0.0;       // |<J^T v, u> - <v, fd(J u)>| / max(|<v, fd(J u)>|, |J^T v| |u|)
  double param_rel = 0.0;     // same for each parameter tensor
  double adjoint = 0.0;       // |<J u, v> - <u, J^T v>| / (1 + |<J u, v>|)
  std::size_t probes = 0;
};

// Central differences with step h along random tangents. `sample` draws a
// batched input inside the layer's smooth domain.
inline ProbeStats probe_layer(const Layer& layer, const std::function<Tensor(Rng&)>& sample,
                              std::size_t probes, Rng& rng, double h = 1e-5) {
  ProbeStats st;
  for (std::size_t p = 0; p < probes; ++p) {
    const Tensor x = sample(rng);
    const Tensor out = layer.forward(x);
    const Tensor u = rng.normal_tensor(x.shape());
    const Tensor v = rng.normal_tensor(out.shape());

    const Tensor ju = layer.jvp(x, out, u);
    const Tensor fp = layer.forward(axpy(x, h, u));
    const Tensor fm = layer.forward(axpy(x, -h, u));
    Tensor fd(out.shape());
    for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (fp[i] - fm[i]) / (2.0 * h);
    st.jvp_rel = std::max(st.jvp_rel, diff_norm(fd, ju) / std::max(norm(ju), 1e-300));

    const auto params = layer.parameters();
    std::vector<Tensor> grads;
    for (const Tensor& t : params) grads.emplace_back(t.shape());
    const Tensor jtv = layer.vjp(x, out, v, grads, true);
    const double lhs = inner(jtv, u), rhs = inner(v, fd);
    st.vjp_rel = std::max(st.vjp_rel, std::fabs(lhs - rhs) / std::max(std::fabs(rhs), norm(jtv) * norm(u)));
    const double jv = inner(ju, v);
    st.adjoint = std::max(st.adjoint, std::fabs(jv - lhs) / (1.0 + std::fabs(jv)));

    for (std::size_t i = 0; i < params.size(); ++i) {
      const Tensor delta = rng.normal_tensor(params[i].shape());
      auto plus = layer.clone(), minus = layer.clone();
      Tensor& pp = plus->parameters()[i];
      Tensor& pm = minus->parameters()[i];
      for (std::size_t e = 0; e < pp.size(); ++e) {
        pp[e] += h * delta[e];
        pm[e] -= h * delta[e];
      }
      const Tensor gp = plus->forward(x), gm = minus->forward(x);
      double fdp = 0.0;
      for (std::size_t e = 0; e < gp.size(); ++e) fdp += v[e] * (gp[e] - gm[e]) / (2.0 * h);
      const double an = inner(grads[i], delta);
      st.param_rel =
          std::max(st.param_rel, std::fabs(an - fdp) / std::max(std::fabs(fdp), norm(grads[i]) * norm(delta)));
    }
    ++st.probes;
  }
  return st;
}

struct LayerCase {
  std::string name;
  std::unique_ptr<Layer> layer;
  std::function<Tensor(Rng&)> sample;
};

// One case per layer kind (two for the kinds with distinct geometries).
inline std::vector<LayerCase> layer_cases(Rng& rng) {
  using namespace latdis;
  std::vector<LayerCase> cases;
  auto normal = [](Shape s) { return [s](Rng& r) { return r.normal_tensor(s); }; };
  cases.push_back({"dense", std::make_unique<Dense>(Dense::random(6, 4, rng)), normal({3, 6})});
  cases.push_back({"conv2d_3x3", std::make_unique<Conv2D>(Conv2D::random(2, 3, 3, 1, 1, rng)), normal({2, 2, 5, 5})});
  cases.push_back({"conv2d_4x4_s2", std::make_unique<Conv2D>(Conv2D::random(2, 3, 4, 2, 1, rng)), normal({2, 2, 6, 6})});
  cases.push_back({"transposed_conv2d",
                   std::make_unique<TransposedConv2D>(TransposedConv2D::random(2, 3, rng)), normal({2, 2, 3, 3})});
  cases.push_back({"nearest_upsample", std::make_unique<NearestUpsample>(2), normal({2, 2, 3, 3})});
  cases.push_back({"avg_pool2d", std::make_unique<AvgPool2D>(2), normal({2, 2, 4, 4})});
  cases.push_back({"reshape", std::make_unique<Reshape>(Shape{18}), normal({2, 2, 3, 3})});
  cases.push_back({"leaky_relu", std::make_unique<LeakyReLU>(0.2), normal({3, 7})});
  cases.push_back({"tanh", std::make_unique<Tanh>(), normal({3, 7})});
  cases.push_back({"sigmoid", std::make_unique<Sigmoid>(), normal({3, 7})});
  cases.push_back({"affine_scalar", std::make_unique<Affine>(1.7, -0.3), normal({3, 5})});
  cases.push_back({"affine_tensor",
                   std::make_unique<Affine>(rng.normal_tensor({5}), rng.normal_tensor({5})), normal({3, 5})});
  cases.push_back({"blob_render", std::make_unique<BlobRender>(8, 8), [](Rng& r) {
                     Tensor f({2, 5});
                     for (std::size_t b = 0; b < 2; ++b) {
                       f.at(b, 0) = r.uniform(2.0, 5.0);
                       f.at(b, 1) = r.uniform(2.0, 5.0);
                       f.at(b, 2) = r.uniform(1.0, 2.0);
                       f.at(b, 3) = r.uniform(0.0, 3.14159);
                       f.at(b, 4) = r.uniform(0.2, 1.0);
                     }
                     return f;
                   }});
  return cases;
}

// One-sided Jacobi (Hestenes) SVD of an m x n matrix, m >= n. Returns
// singular values in descending order and the matching right singular
// vectors as columns of an n x n matrix.
struct Svd {
  std::vector<double> values;
  std::vector<std::vector<double>> v;  // v[j] is the j-th right singular vector
};

inline Svd jacobi_svd(const Tensor& a) {
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<std::vector<double>> u(n, std::vector<double>(m)), v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) u[j][i] = a.at(i, j);
    v[j][j] = 1.0;
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += u[p][i] * u[p][i];
          beta += u[q][i] * u[q][i];
          gamma += u[p][i] * u[q][i];
        }
        if (gamma == 0.0) continue;
        off = std::max(off, std::fabs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u[p][i], uq = u[q][i];
          u[p][i] = c * up - s * uq;
          u[q][i] = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i], vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    if (off < 1e-15) break;
  }
  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (double x : u[j]) s += x * x;
    sv[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });
  Svd out;
  for (std::size_t j : order) {
    out.values.push_back(sv[j]);
    out.v.push_back(v[j]);
  }
  return out;
}

// Mutual information of two label columns by explicit enumeration of the
// value pairs, counting each pair with a fresh pass over the samples.
inline double brute_force_mi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::vector<int> va(a), vb(b);
  std::sort(va.begin(), va.end());
  va.erase(std::unique(va.begin(), va.end()), va.end());
  std::sort(vb.begin(), vb.end());
  vb.erase(std::unique(vb.begin(), vb.end()), vb.end());
  double mi = 0.0;
  for (int x : va) {
    double ca = 0.0;
    for (int s : a) ca += s == x;
    for (int y : vb) {
      double cb = 0.0, cab = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        cb += b[i] == y;
        cab += a[i] == x && b[i] == y;
      }
      if (cab > 0.0) mi += (cab / n) * std::log((cab * n) / (ca * cb));
    }
  }
  return std::max(mi, 0.0);
}

inline double brute_force_entropy(const std::vector<int>& a) {
  std::map<int, double> counts;
  for (int x : a) counts[x] += 1.0;
  double h = 0.0;
  for (const auto& [k, c] : counts) h -= (c / a.size()) * std::log(c / a.size());
  return h;
}

// For each column of `truth`, the largest |cos| against any column of
// `found`. Both are [D, k] with unit columns.
inline std::vector<double> best_abs_cos(const Tensor& truth, const Tensor& found) {
  std::vector<double> out;
  for (std::size_t j = 0; j < truth.dim(1); ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < found.dim(1); ++i) {
      double d = 0.0;
      for (std::size_t r = 0; r < truth.dim(0); ++r) d += truth.at(r, j) * found.at(r, i);
      best = std::max(best, std::fabs(d));
    }
    out.push_back(best);
  }
  return out;
}

// Largest principal angle (radians) between the column spans of two [D, k]
// matrices with orthonormal columns: acos of the smallest singular value of
// a^T b.
inline double max_principal_angle(const Tensor& a, const Tensor& b) {
  const std::size_t k = a.dim(1);
  Tensor c({k, b.dim(1)});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double d = 0.0;
      for (std::size_t r = 0; r < a.dim(0); ++r) d += a.at(r, i) * b.at(r, j);
      c.at(i, j) = d;
    }
  const Svd s = jacobi_svd(c);
  return std::acos(std::min(1.0, s.values.back()));
}

}  // namespace oracle

#endif  // LATDIS_TESTS_ORACLES_HPP_
