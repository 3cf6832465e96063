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

#ifndef LATDIS_BLOB_WORLD_HPP_
#define LATDIS_BLOB_WORLD_HPP_

#include <span>
#include <string>
#include <vector>

#include "latdis/generator.hpp"
#include "latdis/tensor.hpp"

namespace latdis {

struct FactorRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

// Continuous factors of variation, each quantised into `levels` equal-width
// discrete levels for the information-theoretic metrics.
struct FactorSpec {
  std::vector<FactorRange> factors;
  std::size_t levels = 8;

  std::size_t count() const { return factors.size(); }
  void validate() const;
};

// Row-major [rows, cols] matrix of non-negative integer labels.
struct LabelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> values;

  LabelMatrix() = default;
  LabelMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0) {}
  int& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  int at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Level index of each factor value: floor((v - lo) / (hi - lo) * levels),
// with hi mapped to the top level.
LabelMatrix quantize_factors(const Tensor& factors, const FactorSpec& spec);

struct BlobWorldConfig {
  std::size_t latent_dim = 16;
  std::size_t image_size = 32;
  std::vector<double> singular_values{5.0, 4.0, 3.0, 2.0, 1.0};
  // Standard deviation of the style vector along each mixing direction and
  // along the remaining (image-invariant) directions.
  std::vector<double> factor_spread{1.3, 1.1, 3.0, 0.9, 0.6};
  double null_spread = 0.4;
  // Target standard deviation of the pre-sigmoid factor activation for
  // samples truncated with `reference_truncation`.
  std::vector<double> factor_sharpness{1.6, 1.6, 0.6, 1.6, 2.0};
  double reference_truncation = 0.8;
  bool identity_mixing = false;
  std::size_t levels = 8;
  std::uint64_t seed = 0;
};

// Synthetic world with known factors (x, y, width, hue, brightness) and a
// known orthogonal mixing Q between latent space and factor pre-images.
struct BlobWorld {
  FactorSpec spec;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t latent_dim = 16;
  Tensor mixing;                  // Q, [D, D], orthogonal
  std::vector<double> scales;     // diag(S), length D, zero past the factor count
  std::vector<double> gains;      // per-factor sigmoid input gain
  std::vector<double> spread;     // style-space standard deviation per row of Q
};

BlobWorld make_blob_world(const BlobWorldConfig& cfg);
FactorSpec default_blob_factors(std::size_t image_size);

// Throws std::out_of_range when a factor lies outside its range.
Tensor blob_render(std::span<const double> factors, const BlobWorld& world);

// Synthesis layout of the entangled generator; tap constants index it.
//   0 Dense(S_m Q_m)  1 Affine(gain)  2 Sigmoid  3 Affine(range)  4 BlobRender
inline constexpr std::size_t kMixingTap = 1;
inline constexpr std::size_t kFactorTap = 4;
inline constexpr std::size_t kImageTap = 5;

// Generator whose first synthesis layer is the m x D mixing block S_m Q_m
// (bias 0), followed by sigmoid squashing into factor ranges and the blob
// renderer. The style network is the linear map Q^T diag(spread) Q, so
// style vectors have independent components along the mixing directions.
GeneratorNetwork make_entangled_generator(const BlobWorld& world, double truncation = 0.8);

// Columns are the ground-truth directions, the first m rows of Q as [D, m].
Tensor ground_truth_directions(const BlobWorld& world);

// Continuous factor values of w batch via the factor tap.
Tensor latent_factors(const GeneratorNetwork& gen, const Tensor& w);

// Closed-form inverse of the renderer: recovers [x, y, width, hue,
// brightness] from a noiseless [3, H, W] blob image using log-intensity
// finite differences around the brightest pixel. Hue is returned in
// [0, 2 pi).
std::vector<double> readout_factors(const Tensor& image);

// Images and continuous/discrete factors of n fresh samples.
struct LabeledDataset {
  Tensor latents;   // [n, D]
  Tensor images;    // [n, C, H, W]
  Tensor factors;   // [n, m]
  LabelMatrix levels;
};

LabeledDataset make_labeled_dataset(const GeneratorNetwork& gen, const FactorSpec& spec,
                                    std::size_t n, double psi, Rng& rng);

}  // namespace latdis

#endif  // LATDIS_BLOB_WORLD_HPP_
