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

#include <benchmark/benchmark.h>

#include <vector>

#include "latdis/artifact.hpp"
#include "latdis/blob_world.hpp"
#include "latdis/directions.hpp"
#include "latdis/layers.hpp"
#include "latdis/metrics.hpp"
#include "latdis/power_svd.hpp"

namespace {

using namespace latdis;

void BM_DenseForward(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dense layer = Dense::random(n, n, rng);
  const Tensor x = rng.normal_tensor({64, n});
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_DenseForward)->Arg(64)->Arg(256);

void BM_Conv2DForward(benchmark::State& state) {
  Rng rng(2);
  const Conv2D layer = Conv2D::random(16, 16, 3, 1, 1, rng);
  const Tensor x = rng.normal_tensor({32, 16, 16, 16});
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Conv2DForward);

void BM_Conv2DBackward(benchmark::State& state) {
  Rng rng(3);
  Conv2D layer = Conv2D::random(16, 16, 3, 1, 1, rng);
  const Tensor x = rng.normal_tensor({32, 16, 16, 16});
  const Tensor y = layer.forward(x);
  const Tensor g = rng.normal_tensor(y.shape());
  std::vector<Tensor> grads;
  for (const Tensor& p : layer.parameters()) grads.emplace_back(p.shape());
  for (auto _ : state) benchmark::DoNotOptimize(layer.vjp(x, y, g, grads, true));
}
BENCHMARK(BM_Conv2DBackward);

// Top-5 singular pairs of a dense 50 x 30 matrix.
void BM_PowerSvdMatrix(benchmark::State& state) {
  Rng rng(4);
  const LinearOperatorHandle op = matrix_operator(rng.normal_tensor({50, 30}));
  for (auto _ : state) {
    Rng r(5);
    benchmark::DoNotOptimize(power_svd(op, 5, r));
  }
}
BENCHMARK(BM_PowerSvdMatrix);

// Image Jacobian of the BlobWorld generator at the mean latent.
void BM_PowerSvdJacobian(benchmark::State& state) {
  const BlobWorld world = make_blob_world({});
  const GeneratorNetwork gen = make_entangled_generator(world);
  const LinearOperatorHandle op = jacobian_operator(gen, gen.mean_latent(), gen.synthesis().depth());
  for (auto _ : state) {
    Rng r(6);
    benchmark::DoNotOptimize(power_svd(op, 5, r));
  }
}
BENCHMARK(BM_PowerSvdJacobian)->Unit(benchmark::kMillisecond);

void BM_ClosedForm(benchmark::State& state) {
  const GeneratorNetwork gen = make_entangled_generator(make_blob_world({}));
  for (auto _ : state) benchmark::DoNotOptimize(closed_form(gen, 5));
}
BENCHMARK(BM_ClosedForm);

void BM_MutualInfoMatrix(benchmark::State& state) {
  Rng rng(7);
  const auto n = static_cast<std::size_t>(state.range(0));
  const DiscreteCodes codes = discretize(rng.normal_tensor({n, 5}), 20);
  LabelMatrix factors(n, 5);
  for (int& v : factors.values) v = static_cast<int>(rng.below(10));
  for (auto _ : state) benchmark::DoNotOptimize(mutual_info_matrix(codes, factors));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MutualInfoMatrix)->Arg(1000)->Arg(10000);

void BM_ArtifactRoundTrip(benchmark::State& state) {
  Rng rng(8);
  Artifact a;
  a.kind = ArtifactKind::kNetwork;
  a.put("w", rng.normal_tensor({256, 256}));
  for (auto _ : state) benchmark::DoNotOptimize(decode_artifact(encode_artifact(a)));
  state.SetBytesProcessed(state.iterations() * 256 * 256 * 8);
}
BENCHMARK(BM_ArtifactRoundTrip);

}  // namespace

BENCHMARK_MAIN();
