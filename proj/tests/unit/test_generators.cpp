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
#include "latdis/gan.hpp"
#include "latdis/generator.hpp"
#include "latdis/linalg.hpp"

using namespace latdis;

TEST_CASE("blob renderer follows its pixel formula") {
  BlobWorldConfig cfg;
  const BlobWorld world = make_blob_world(cfg);
  const std::vector<double> f{12.3, 17.8, 2.5, 1.1, 0.7};
  const Tensor img = blob_render(f, world);
  REQUIRE(img.shape() == Shape{3, 32, 32});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t py : {0u, 17u, 31u}) {
      for (std::size_t px : {3u, 12u, 30u}) {
        const double dx = px - f[0], dy = py - f[1];
        const double hue_c = 0.5 + 0.4 * std::cos(f[3] - 2.0 * M_PI * c / 3.0);
        const double want = f[4] * hue_c * std::exp(-(dx * dx + dy * dy) / (2 * f[2] * f[2]));
        CHECK(img[(c * 32 + py) * 32 + px] == doctest::Approx(want).epsilon(1e-14));
      }
    }
  }
  CHECK_THROWS_AS(blob_render(std::vector<double>{40.0, 10, 2, 1, 0.5}, world), std::out_of_range);
}

TEST_CASE("factor readout inverts the renderer") {
  BlobWorldConfig cfg;
  const BlobWorld world = make_blob_world(cfg);
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> f;
    for (const auto& r : world.spec.factors) f.push_back(rng.uniform(r.lo, r.hi));
    const auto got = readout_factors(blob_render(f, world));
    for (std::size_t j = 0; j < 5; ++j) CHECK(got[j] == doctest::Approx(f[j]).epsilon(1e-6));
  }
}

TEST_CASE("entangled generator layout") {
  BlobWorldConfig cfg;
  cfg.seed = 9;
  const BlobWorld world = make_blob_world(cfg);
  CHECK(linalg::orthonormality_error(world.mixing) < 1e-12);
  const GeneratorNetwork gen = make_entangled_generator(world, 0.8);
  CHECK(gen.latent_dim() == 16);
  CHECK(gen.image_shape() == Shape{3, 32, 32});
  for (double m : gen.mean_latent().data()) CHECK(m == 0.0);

  // First weight is S_m Q_m.
  const auto blocks = gen.style_input_weights();
  REQUIRE(blocks.size() == 1);
  REQUIRE(blocks[0].shape() == Shape{5, 16});
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 16; ++c)
      CHECK(blocks[0].at(r, c) == doctest::Approx(cfg.singular_values[r] * world.mixing.at(r, c)));

  Rng rng(1);
  const LabeledDataset data = make_labeled_dataset(gen, world.spec, 500, 0.8, rng);
  for (std::size_t j = 0; j < 5; ++j) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < 500; ++i) {
      lo = std::min(lo, data.factors.at(i, j));
      hi = std::max(hi, data.factors.at(i, j));
    }
    CHECK(lo >= world.spec.factors[j].lo);
    CHECK(hi <= world.spec.factors[j].hi);
    CHECK(hi - lo > 0.3 * (world.spec.factors[j].hi - world.spec.factors[j].lo));
  }
  for (int v : data.levels.values) CHECK((v >= 0 && v < 8));
  // Ground-truth directions only move their own factor.
  const Tensor truth = ground_truth_directions(world);
  Tensor w({2, 16});
  for (std::size_t i = 0; i < 16; ++i) w.at(1, i) = 0.5 * truth.at(i, 2);
  const Tensor f = latent_factors(gen, w);
  for (std::size_t j = 0; j < 5; ++j) {
    if (j == 2) CHECK(f.at(1, j) != doctest::Approx(f.at(0, j)));
    else CHECK(f.at(1, j) == doctest::Approx(f.at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("factor quantization puts the top value in the top level") {
  FactorSpec spec{{{"a", 0.0, 1.0}}, 4};
  const Tensor f = Tensor::matrix(5, 1, {0.0, 0.249, 0.25, 0.99, 1.0});
  const LabelMatrix l = quantize_factors(f, spec);
  CHECK(l.values == std::vector<int>{0, 0, 1, 3, 3});
}

TEST_CASE("plain synthesis networks") {
  Rng rng(2);
  for (bool up : {false, true}) {
    for (std::size_t c : {1u, 3u}) {
      PlainGeneratorConfig cfg;
      cfg.channels = c;
      cfg.use_upsample = up;
      cfg.image_size = 16;
      const Network net = make_plain_synthesis(cfg, rng);
      CHECK(net.output_shape() == Shape{c, 16, 16});
      const Tensor img = net.forward_batch(rng.normal_tensor({3, 16}));
      for (double v : img.data()) CHECK((v > 0.0 && v < 1.0));
    }
  }
  PlainGeneratorConfig bad;
  bad.image_size = 20;
  CHECK_THROWS(make_plain_synthesis(bad, rng));
}

TEST_CASE("truncation and sampling") {
  Rng rng(3);
  const Network style = make_style_mlp(8, 2, rng);
  PlainGeneratorConfig pc;
  pc.latent_dim = 8;
  pc.image_size = 8;
  Rng mrng(4);
  const GeneratorNetwork gen(style, make_plain_synthesis(pc, rng), 0.7, mrng, 2000);
  const Tensor w = rng.normal_tensor({4, 8});
  CHECK(truncate(w, gen.mean_latent(), 1.0) == w);
  const Tensor t0 = truncate(w, gen.mean_latent(), 0.0);
  for (std::size_t i = 0; i < 8; ++i) CHECK(t0.at(2, i) == doctest::Approx(gen.mean_latent()[i]));
  CHECK_THROWS(truncate(w, gen.mean_latent(), 1.5));
  Rng a(5), b(5);
  CHECK(sample_latents(gen, 10, a, 0.7) == sample_latents(gen, 10, b, 0.7));
}

TEST_CASE("gan training matches the data's first two pixel moments") {
  // Flat gray images with intensity uniform in [0.3, 0.7].
  Rng rng(6);
  const std::size_t n = 2000;
  Tensor images({n, 1, 8, 8});
  for (std::size_t i = 0; i < n; ++i) {
    const double v = rng.uniform(0.3, 0.7);
    for (std::size_t p = 0; p < 64; ++p) images[i * 64 + p] = v;
  }
  GanConfig cfg;
  cfg.generator.latent_dim = 4;
  cfg.generator.base_channels = 8;
  cfg.n_mlp = 1;
  cfg.disc_channels = 8;
  cfg.iterations = 10000;
  cfg.truncation = 1.0;
  Rng train(7);
  const GanResult res = train_gan(images, cfg, train);
  CHECK(res.d_loss.size() == 10000);
  Rng srng(8);
  const Tensor fake = res.generator.synthesize(sample_latents(res.generator, 1000, srng, 1.0));
  double mean = 0.0, sq = 0.0, img_sq = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    double m = 0.0;
    for (std::size_t p = 0; p < 64; ++p) {
      const double v = fake[i * 64 + p];
      m += v;
      sq += v * v;
    }
    mean += m;
    img_sq += (m / 64) * (m / 64);
  }
  mean /= fake.size();
  const double sd = std::sqrt(sq / fake.size() - mean * mean);
  const double between = std::sqrt(img_sq / 1000 - mean * mean);
  MESSAGE("fake mean " << mean << " sd " << sd << " between-image sd " << between);
  CHECK(std::fabs(mean - 0.5) < 0.05);
  CHECK(std::fabs(sd - 0.4 / std::sqrt(12.0)) < 0.03);
  CHECK(between > 0.05);  // not collapsed onto one gray level

  GanConfig bad = cfg;
  bad.iterations = 0;
  CHECK_THROWS(train_gan(images, bad, train));
}
