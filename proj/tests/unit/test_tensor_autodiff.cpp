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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "latdis/adam.hpp"
#include "latdis/linalg.hpp"
#include "latdis/loss.hpp"
#include "latdis/network.hpp"
#include "oracles.hpp"

using namespace latdis;

TEST_CASE("tensor rejects bad construction") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<double>::quiet_NaN()}), NonFiniteError);
  CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<double>::infinity()}), NonFiniteError);
  const Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(t.at(1, 2) == 6.0);
  CHECK(t.reshaped({3, 2}).at(2, 1) == 6.0);
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(42, 1), b(42, 1), c(42, 2);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  Rng n(7);
  double mean = 0.0, sq = 0.0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double z = n.normal();
    mean += z;
    sq += z * z;
  }
  mean /= count;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(sq / count - 1.0) < 0.02);
}

TEST_CASE("every layer kind matches central differences") {
  Rng rng(2026, 1);
  auto cases = oracle::layer_cases(rng);
  bool kinds[11] = {};
  for (auto& c : cases) {
    kinds[static_cast<int>(c.layer->kind())] = true;
    const auto st = oracle::probe_layer(*c.layer, c.sample, 20, rng);
    INFO(c.name);
    CHECK(st.jvp_rel < 1e-6);
    CHECK(st.vjp_rel < 1e-6);
    CHECK(st.param_rel < 1e-6);
    CHECK(st.adjoint < 1e-10);
  }
  for (bool k : kinds) CHECK(k);
}

TEST_CASE("layers round-trip through make_layer") {
  Rng rng(3);
  for (auto& c : oracle::layer_cases(rng)) {
    std::vector<Tensor> params(c.layer->parameters().begin(), c.layer->parameters().end());
    const auto copy = make_layer(c.layer->kind(), c.layer->config(), params);
    const Tensor x = c.sample(rng);
    CHECK(copy->forward(x) == c.layer->forward(x));
  }
}

TEST_CASE("network backward matches finite differences") {
  Rng rng(11);
  Network net(Shape{2, 4, 4});
  net.add(Conv2D::random(2, 3, 3, 1, 1, rng));
  net.add(LeakyReLU(0.2));
  net.add(AvgPool2D(2));
  net.add(Reshape({12}));
  net.add(Dense::random(12, 3, rng));
  net.add(Tanh());
  const Tensor x = rng.normal_tensor({4, 2, 4, 4});
  const Tensor target = rng.normal_tensor({4, 3});
  const auto pg = param_gradients(net, x, LossSpec::mse(target));
  auto params = net.parameters();
  REQUIRE(pg.grads.size() == params.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor delta = rng.normal_tensor(params[i]->shape());
    const Tensor saved = *params[i];
    *params[i] = oracle::axpy(saved, h, delta);
    const double lp = evaluate_loss(LossSpec::mse(target), net.forward_batch(x)).value;
    *params[i] = oracle::axpy(saved, -h, delta);
    const double lm = evaluate_loss(LossSpec::mse(target), net.forward_batch(x)).value;
    *params[i] = saved;
    const double fd = (lp - lm) / (2 * h);
    CHECK(std::fabs(fd - oracle::inner(pg.grads[i], delta)) < 1e-6 * (1.0 + std::fabs(fd)));
  }
  // Input-space Jacobian through the whole chain, against forward-mode.
  const Tensor u = rng.normal_tensor(x.shape());
  const Tensor v = rng.normal_tensor({4, 3});
  const Tensor ju = net.jvp_batch(x, u, net.depth());
  const Tensor jtv = net.backward(net.trace(x), v, nullptr, true);
  CHECK(std::fabs(oracle::inner(ju, v) - oracle::inner(u, jtv)) < 1e-10 * (1.0 + std::fabs(oracle::inner(ju, v))));
}

TEST_CASE("network rejects incompatible layers with the index") {
  Network net(Shape{4});
  net.add(Dense(Tensor({3, 4}), Tensor({3})));
  try {
    net.add(Dense(Tensor({2, 5}), Tensor({2})));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("losses and their gradients") {
  const Tensor pred = Tensor::matrix(2, 2, {1.0, 2.0, 0.0, -1.0});
  const Tensor tgt = Tensor::matrix(2, 2, {0.0, 2.0, 1.0, 1.0});
  const auto mse = evaluate_loss(LossSpec::mse(tgt), pred);
  CHECK(mse.value == doctest::Approx((1.0 + 0.0 + 1.0 + 4.0) / 4.0));
  CHECK(mse.grad[3] == doctest::Approx(2.0 * (-2.0) / 4.0));
  const auto mae = evaluate_loss(LossSpec::mae(tgt), pred);
  CHECK(mae.value == doctest::Approx((1.0 + 0.0 + 1.0 + 2.0) / 4.0));
  const auto ce = evaluate_loss(LossSpec::cross_entropy({1, 0}), pred);
  const double l0 = -std::log(std::exp(2.0) / (std::exp(1.0) + std::exp(2.0)));
  const double l1 = -std::log(std::exp(0.0) / (std::exp(0.0) + std::exp(-1.0)));
  CHECK(ce.value == doctest::Approx((l0 + l1) / 2.0));
  const Tensor p = softmax_rows(pred);
  CHECK(ce.grad[0] == doctest::Approx(p[0] / 2.0));
  CHECK(ce.grad[1] == doctest::Approx((p[1] - 1.0) / 2.0));
}

TEST_CASE("adam matches the bias-corrected update") {
  Tensor p = Tensor::vector({1.0, -2.0});
  const Tensor g = Tensor::vector({0.5, -0.25});
  std::vector<Tensor*> ps{&p};
  AdamState st(std::span<Tensor* const>(ps), AdamConfig{0.1, 0.9, 0.999, 1e-8});
  std::vector<Tensor> gs{g};
  adam_step(std::span<Tensor* const>(ps), gs, st);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1 * 0.25 / (0.25 + 1e-8)).epsilon(1e-14));
  adam_step(std::span<Tensor* const>(ps), gs, st);
  CHECK(st.step == 2);
}

TEST_CASE("cayley map is orthogonal and its gradient matches differences") {
  Rng rng(5);
  Tensor p = rng.normal_tensor({4, 4}, 0.3);
  Tensor a({4, 4});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) a.at(i, j) = p.at(i, j) - p.at(j, i);
  const Tensor q = linalg::cayley(a);
  CHECK(linalg::orthonormality_error(q) < 1e-12);
  const Tensor gq = rng.normal_tensor({4, 4});
  const Tensor ga = linalg::cayley_backward(a, q, gq);
  const Tensor da = rng.normal_tensor({4, 4});
  const double h = 1e-6;
  const double fd = (oracle::inner(linalg::cayley(oracle::axpy(a, h, da)), gq) -
                     oracle::inner(linalg::cayley(oracle::axpy(a, -h, da)), gq)) / (2 * h);
  CHECK(std::fabs(fd - oracle::inner(ga, da)) < 1e-7 * (1.0 + std::fabs(fd)));
}

TEST_CASE("orthonormalize and symmetric eigen") {
  Rng rng(8);
  const Tensor m = rng.normal_tensor({6, 3});
  const Tensor q = linalg::orthonormalize(m);
  CHECK(linalg::orthonormality_error(q) < 1e-14);
  // span check: m = q (q^T m)
  const Tensor back = linalg::matmul(q, linalg::matmul_tn(q, m));
  CHECK(oracle::diff_norm(back, m) < 1e-12);
  Tensor dep = m;
  for (std::size_t i = 0; i < 6; ++i) dep.at(i, 2) = dep.at(i, 0) * 2.0;
  CHECK_THROWS_AS(linalg::orthonormalize(dep), linalg::RankDeficientError);

  const Tensor s = linalg::matmul_tn(m, m);
  const auto eig = linalg::symmetric_eigen(s);
  for (std::size_t j = 0; j < 3; ++j) {
    const Tensor v = linalg::column(eig.vectors, j);
    const Tensor sv = linalg::matmul(s, v.reshaped({3, 1}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(sv[i] == doctest::Approx(eig.values[j] * v[i]).epsilon(1e-10));
  }
  CHECK(eig.values[0] >= eig.values[1]);
}
