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

#include "latdis/blob_world.hpp"
#include "latdis/directions.hpp"
#include "latdis/linalg.hpp"
#include "latdis/power_svd.hpp"
#include "oracles.hpp"

using namespace latdis;

namespace {

// U diag(s) V^T with Haar factors.
Tensor with_spectrum(std::size_t m, std::size_t n, const std::vector<double>& s, Rng& rng, Tensor* v_out) {
  const Tensor u = linalg::random_orthogonal(m, rng);
  const Tensor v = linalg::random_orthogonal(n, rng);
  Tensor us({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n && j < s.size(); ++j) us.at(i, j) = u.at(i, j) * s[j];
  if (v_out) *v_out = v;
  return linalg::matmul(us, linalg::transpose(v));
}

}  // namespace

TEST_CASE("power_svd agrees with the Jacobi oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = rng.normal_tensor({50, 30});
    const auto ref = oracle::jacobi_svd(a);
    const std::size_t k = 6;
    Rng prng(trial, 9);
    const auto got = power_svd(matrix_operator(a), k, prng);
    REQUIRE(got.converged);
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(std::fabs(got.values[j] - ref.values[j]) < 1e-8 * ref.values[j]);
      double c = 0.0;
      for (std::size_t i = 0; i < 30; ++i) c += got.vectors.at(i, j) * ref.v[j][i];
      CHECK(std::fabs(c) > 1.0 - 1e-8);
    }
  }
}

TEST_CASE("power_svd on a degenerate pair returns the right subspace") {
  Rng rng(2);
  Tensor v;
  const Tensor a = with_spectrum(20, 12, {3.0, 3.0, 2.0, 1.0, 0.5}, rng, &v);
  Rng prng(3);
  const auto got = power_svd(matrix_operator(a), 3, prng);
  CHECK(got.values[0] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(got.values[1] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(got.values[2] == doctest::Approx(2.0).epsilon(1e-10));
  const Tensor found = linalg::leading_columns(got.vectors, 2);
  const Tensor truth = linalg::leading_columns(v, 2);
  CHECK(oracle::max_principal_angle(truth, found) < 1e-4);
  const auto blocks = find_degenerate_blocks(got.values);
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].begin == 0);
  CHECK(blocks[0].size == 2);
}

TEST_CASE("power_svd handles rank deficiency and reports non-convergence") {
  Rng rng(4);
  const Tensor a = with_spectrum(10, 8, {2.0, 1.0}, rng, nullptr);
  Rng prng(5);
  const auto got = power_svd(matrix_operator(a), 4, prng);
  CHECK(got.values[0] == doctest::Approx(2.0));
  CHECK(got.values[1] == doctest::Approx(1.0));
  CHECK(got.values[2] < 1e-6);

  const Tensor b = rng.normal_tensor({30, 20});
  PowerSvdOptions strict;
  strict.max_iter = 1;
  strict.oversample = 0;
  Rng r1(6);
  CHECK_THROWS_AS(power_svd(matrix_operator(b), 5, r1, strict), PowerSvdError);
  strict.accept_unconverged = true;
  Rng r2(6);
  const auto partial = power_svd(matrix_operator(b), 5, r2, strict);
  CHECK_FALSE(partial.converged);
  CHECK(linalg::orthonormality_error(partial.vectors) < 1e-12);
  Rng r3(6);
  CHECK_THROWS(power_svd(matrix_operator(b), 21, r3));
}

TEST_CASE("closed form is the SVD of the first weight") {
  Rng rng(7);
  Tensor v;
  const Tensor w = with_spectrum(12, 6, {4.0, 3.0, 2.0, 1.0, 0.5, 0.25}, rng, &v);
  const DirectionSet cf = closed_form(std::vector<Tensor>{w}, 4);
  cf.validate();
  const auto cos = oracle::best_abs_cos(linalg::leading_columns(v, 4), cf.directions);
  for (double c : cos) CHECK(c > 1.0 - 1e-12);
  CHECK(cf.values[0] == doctest::Approx(4.0));
  const Tensor low = with_spectrum(12, 6, {1.0, 1.0}, rng, nullptr);
  CHECK_THROWS_AS(closed_form(std::vector<Tensor>{low}, 3), std::invalid_argument);
}

TEST_CASE("closed form and deep spectral coincide on linear generators") {
  Rng rng(8);
  const std::size_t d = 10;
  Network synth(Shape{d});
  synth.add(Dense(with_spectrum(24, d, {6, 5, 4, 3, 2, 1.5, 1, 0.7, 0.4, 0.2}, rng, nullptr),
                  rng.normal_tensor({24})));
  synth.add(Affine(0.5, 0.1));
  synth.add(Reshape({2, 3, 4}));
  const GeneratorNetwork gen(std::nullopt, synth, 1.0, Tensor(Shape{d}));
  const DirectionSet cf = closed_form(gen, 5);
  Rng srng(9);
  const DirectionSet ds = deep_spectral(gen, synth.depth(), 5, srng, rng.normal_tensor({d}));
  for (std::size_t j = 0; j < 5; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < d; ++i) c += cf.directions.at(i, j) * ds.directions.at(i, j);
    CHECK(std::fabs(c) > 1.0 - 1e-8);
    CHECK(ds.values[j] == doctest::Approx(0.5 * cf.values[j]).epsilon(1e-9));
  }
}

TEST_CASE("ganspace recovers a planted covariance") {
  Rng rng(10);
  Tensor v;
  const Tensor mix = with_spectrum(6, 6, {1, 1, 1, 1, 1, 1}, rng, &v);
  (void)mix;
  const std::vector<double> sd{3.0, 2.0, 1.0, 0.3, 0.2, 0.1};
  Tensor x({20000, 6});
  for (std::size_t r = 0; r < 20000; ++r) {
    for (std::size_t j = 0; j < 6; ++j) {
      const double z = rng.normal() * sd[j];
      for (std::size_t i = 0; i < 6; ++i) x.at(r, i) += z * v.at(i, j) + 0.0;
    }
  }
  const DirectionSet gs = ganspace_from_samples(x, 3);
  gs.validate();
  CHECK(oracle::max_principal_angle(linalg::leading_columns(v, 3), gs.directions) < 0.05);
  CHECK(gs.values[0] == doctest::Approx(9.0).epsilon(0.05));
}

TEST_CASE("BlobWorld ground truth is recovered") {
  BlobWorldConfig cfg;
  cfg.seed = 3;
  const BlobWorld world = make_blob_world(cfg);
  const GeneratorNetwork gen = make_entangled_generator(world);
  const Tensor truth = ground_truth_directions(world);

  const DirectionSet cf = closed_form(gen, 5);
  for (double c : oracle::best_abs_cos(truth, cf.directions)) CHECK(c > 1.0 - 1e-8);

  Rng srng(4);
  const DirectionSet ds = deep_spectral(gen, kImageTap, 5, srng);
  for (double c : oracle::best_abs_cos(truth, ds.directions)) CHECK(c > 0.98);
  CHECK(ds.tap == kImageTap);

  Rng grng(5);
  const DirectionSet gs = ganspace(gen, 5, grng, 20000);
  CHECK(oracle::max_principal_angle(truth, gs.directions) < 10.0 * M_PI / 180.0);
}

TEST_CASE("method names parse both ways") {
  for (Method m : {Method::kClosedForm, Method::kGanSpace, Method::kDeepSpectral, Method::kLatentDiscovery}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK(parse_method("DS") == Method::kDeepSpectral);
  CHECK_THROWS_AS(parse_method("pca"), std::invalid_argument);
}

TEST_CASE("direction sets reject broken invariants") {
  DirectionSet d;
  d.directions = Tensor::matrix(2, 2, {1, 0, 0, 1});
  d.values = {2.0, 1.0};
  CHECK_NOTHROW(d.validate());
  d.values = {1.0, 2.0};
  CHECK_THROWS(d.validate());
  d.values = {};
  d.directions = Tensor::matrix(2, 2, {1, 0, 1, 1});
  CHECK_THROWS(d.validate());
}

TEST_CASE("latent discovery learns distinguishable directions") {
  // Identity mixing with a sharp renderer: each latent axis moves one factor.
  BlobWorldConfig cfg;
  cfg.latent_dim = 8;
  cfg.identity_mixing = true;
  const GeneratorNetwork gen = make_entangled_generator(make_blob_world(cfg));
  LdConfig ld;
  ld.k = 3;
  ld.iterations = 400;
  ld.batch_size = 16;
  ld.lr = 2e-3;
  ld.reconstructor = "conv3-small";
  ld.heldout_pairs = 256;
  const LdResult res = latent_discovery(gen, ld);
  res.directions.validate();
  CHECK(res.directions.k() == 3);
  CHECK(linalg::orthonormality_error(res.directions.directions) < 1e-10);
  CHECK(res.loss_trace.back() < res.loss_trace.front());
  CHECK(res.heldout_accuracy > 0.9);

  LdConfig bad = ld;
  bad.lr = 1e300;
  bad.iterations = 50;
  CHECK_THROWS(latent_discovery(gen, bad));
}
