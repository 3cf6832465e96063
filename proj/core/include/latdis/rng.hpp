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

#ifndef LATDIS_RNG_HPP_
#define LATDIS_RNG_HPP_

#include <array>
#include <cstdint>
#include <span>

#include "latdis/tensor.hpp"

namespace latdis {

// Reproducible random stream.
//
// Algorithm: xoshiro256** (Blackman & Vigna). The 256-bit state is filled by
// four successive SplitMix64 outputs started at
//   seed ^ (0x9e3779b97f4a7c15 * (stream + 1)).
// Uniform doubles take the top 53 bits of a draw: u = (x >> 11) * 2^-53, in
// [0, 1). Normals use the Box-Muller transform on u1' = 1 - u1 (in (0, 1])
// and u2: r = sqrt(-2 ln u1'), returning r cos(2 pi u2) first and caching
// r sin(2 pi u2) for the next call.
//
// Only integer arithmetic defines the raw stream, so identical (seed, stream)
// pairs reproduce the same draws everywhere; normals additionally depend on
// the platform's log/cos/sin.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Independent stream derived from this stream's seed; does not advance
  // this generator.
  Rng substream(std::uint64_t id) const;

  void fill_normal(std::span<double> out, double stddev = 1.0);
  Tensor normal_tensor(Shape shape, double stddev = 1.0);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace latdis

#endif  // LATDIS_RNG_HPP_
