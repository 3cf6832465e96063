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

#ifndef LATDIS_DIRECTIONS_HPP_
#define LATDIS_DIRECTIONS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latdis/generator.hpp"
#include "latdis/power_svd.hpp"
#include "latdis/rng.hpp"
#include "latdis/tensor.hpp"

namespace latdis {

enum class Method : std::uint8_t {
  kClosedForm = 0,
  kGanSpace = 1,
  kDeepSpectral = 2,
  kLatentDiscovery = 3,
};

// "cf", "gs", "ds", "ld".
std::string_view method_name(Method m);
// Accepts the short names, case-insensitively. Throws std::invalid_argument.
Method parse_method(std::string_view name);

// Run of consecutive values that agree to 1e-6 relative; vectors inside a
// block are only determined up to a rotation of the block.
struct DegenerateBlock {
  std::size_t begin = 0;
  std::size_t size = 0;
};

struct DirectionSet {
  Tensor directions;             // N, [D, k], orthonormal columns
  Method method = Method::kClosedForm;
  std::optional<std::size_t> tap;  // synthesis tap (DS only)
  std::uint64_t seed = 0;
  std::vector<double> values;    // descending; empty for LD
  std::vector<DegenerateBlock> degenerate;
  std::uint64_t base_hash = 0;   // hash of the DS base point

  std::size_t latent_dim() const { return directions.dim(0); }
  std::size_t k() const { return directions.dim(1); }
  // Throws std::invalid_argument when the stored fields break an invariant.
  void validate() const;
  std::uint64_t hash() const;
};

inline constexpr double kDegenerateRelGap = 1e-6;
std::vector<DegenerateBlock> find_degenerate_blocks(const std::vector<double>& values);

// Orthonormal basis of span(M) with positive R diagonal.
Tensor orthonormalize(const Tensor& m);

// Top-k right singular vectors of the vertically stacked style-input weight
// blocks. Throws std::invalid_argument naming the rank when k exceeds it.
DirectionSet closed_form(const std::vector<Tensor>& blocks, std::size_t k);
DirectionSet closed_form(const GeneratorNetwork& gen, std::size_t k);

inline constexpr std::size_t kGanSpaceSamples = 20000;

// Principal axes of n style vectors style(z), z ~ N(0, I). Generators without
// a style network use z itself.
DirectionSet ganspace(const GeneratorNetwork& gen, std::size_t k, Rng& rng,
                      std::size_t n_samples = kGanSpaceSamples);
// PCA of explicit rows [n, D].
DirectionSet ganspace_from_samples(const Tensor& samples, std::size_t k);

// Right singular vectors of the Jacobian of synthesis tap `tap` at w0
// (default: the style vector of z = 0).
DirectionSet deep_spectral(const GeneratorNetwork& gen, std::size_t tap, std::size_t k, Rng& rng,
                           std::optional<Tensor> w0 = {}, const PowerSvdOptions& options = {});

struct LdConfig {
  std::size_t k = 10;
  double lambda = 0.25;
  double shift_min = 1.0;   // |eps| drawn uniformly from [shift_min, shift_max]
  double shift_max = 6.0;
  std::size_t iterations = 5000;
  std::size_t batch_size = 32;
  double lr = 1e-3;             // reconstructor
  double direction_lr = 1e-3;   // skew parameter of the rotation
  std::string reconstructor = "conv3";
  std::size_t heldout_pairs = 512;
  std::uint64_t seed = 0;

  void validate() const;
};

// Reconstructor architectures by tag: "conv3" (three 4x4 stride-2 convs on
// the channel-stacked pair, hidden Dense, joint head of k logits plus one
// shift estimate) and "conv3-small" (half the channels).
Network make_reconstructor(const std::string& tag, const Shape& image_shape, std::size_t k,
                           Rng& rng);

struct LdResult {
  DirectionSet directions;
  Network reconstructor;
  std::vector<double> loss_trace;     // per iteration
  double heldout_accuracy = 0.0;      // direction classification on fresh pairs
  double heldout_shift_mae = 0.0;
};

// Trains N = Q0 cay(A) [I_k; 0] jointly with the reconstructor by Adam on
// cross-entropy(j, j_hat) + lambda |eps - eps_hat| over pairs
// (G(w), G(w + eps n_j)). cay(A) = (I - A)^-1 (I + A) with A skew-symmetric
// keeps N orthonormal at every step; the result is polished by QR.
LdResult latent_discovery(const GeneratorNetwork& gen, const LdConfig& cfg);

}  // namespace latdis

#endif  // LATDIS_DIRECTIONS_HPP_
