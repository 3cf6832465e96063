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

#ifndef LATDIS_DISTILL_HPP_
#define LATDIS_DISTILL_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "latdis/directions.hpp"
#include "latdis/generator.hpp"
#include "latdis/network.hpp"
#include "latdis/rng.hpp"

namespace latdis {

// Representation of latent rows w under N: w N, [n, k].
Tensor project_codes(const Tensor& w, const DirectionSet& dirs);
Tensor project_codes(const Tensor& w, const Tensor& n);

struct DatasetProvenance {
  std::uint64_t generator_hash = 0;
  std::uint64_t directions_hash = 0;
  double truncation = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Latents and images are shared between datasets that differ only in their
// directions (see retarget), so a sweep renders each image set once.
struct SyntheticDataset {
  std::shared_ptr<const Tensor> latents;  // [n, D]
  std::shared_ptr<const Tensor> images;   // [n, C, H, W]
  Tensor targets;                         // [n, k] = latents N
  DatasetProvenance provenance;

  std::size_t size() const { return latents ? latents->dim(0) : 0; }
  std::uint64_t hash() const;
};

inline constexpr std::size_t kDefaultSyntheticSamples = 50000;

// n latents drawn by sample_latents with truncation psi, their images and
// targets. Deterministic given the rng state.
SyntheticDataset build_synthetic_dataset(const GeneratorNetwork& gen, const DirectionSet& dirs,
                                         std::size_t n, double psi, Rng& rng);
// Same latents and images, targets recomputed for another direction set.
SyntheticDataset retarget(const SyntheticDataset& ds, const DirectionSet& dirs);

struct Encoder {
  Network net;
  std::string arch;

  std::size_t code_dim() const { return net.output_shape().front(); }
  const Shape& input_shape() const { return net.input_shape(); }
};

// Architecture tags:
//   desk32   3 x [Conv 4x4 stride 2, ReLU] (C -> 32 -> 32 -> 64), FC 1024 -> 256 -> k
//   full64  4 x [Conv 4x4 stride 2, ReLU] (C -> 32 -> 32 -> 64 -> 64), FC 1024 -> 256 -> k
//   compact  AvgPool 2x2, FC -> 128 -> 64 -> k with ReLU
Encoder make_encoder(const std::string& arch, const Shape& image_shape, std::size_t k, Rng& rng);

struct EncoderHyper {
  std::size_t batch_size = 128;
  double lr = 1e-3;
  std::size_t epochs = 20;
  std::size_t decay_every = 10;   // epochs between lr *= gamma
  double gamma = 0.5;
  double holdout_fraction = 0.05; // trailing rows, never trained on
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  double initial_heldout_mse = 0.0;
  std::vector<double> epoch_train_mse;
  double heldout_mse = 0.0;
  double heldout_target_variance = 0.0;  // mean per-column variance
  double wall_seconds = 0.0;
  std::uint64_t param_hash = 0;
};

// Mean per-element squared error between encoded images and targets, the
// quantity the training loop minimises.
double encoder_mse(const Encoder& enc, const Tensor& images, const Tensor& targets);

// Adam on the mean squared error between E(images) and targets with a step
// learning-rate schedule lr * gamma^(epoch / decay_every). Rows are shuffled
// per epoch from `hyper.seed`; the trailing holdout rows only feed the report.
std::pair<Encoder, TrainReport> train_encoder(const SyntheticDataset& ds, Encoder enc,
                                              const EncoderHyper& hyper);
std::pair<Encoder, TrainReport> train_encoder(const SyntheticDataset& ds, const std::string& arch,
                                              const EncoderHyper& hyper);

// Codes of an image batch, [n, k].
Tensor encode(const Encoder& enc, const Tensor& images);

}  // namespace latdis

#endif  // LATDIS_DISTILL_HPP_
