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

#ifndef LATDIS_TRAVERSAL_HPP_
#define LATDIS_TRAVERSAL_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "latdis/directions.hpp"
#include "latdis/generator.hpp"

namespace latdis {

// n evenly spaced values from lo to hi inclusive.
std::vector<double> alpha_grid(std::size_t n = 7, double lo = -3.0, double hi = 3.0);

struct TraversalSpec {
  std::size_t direction = 0;
  std::vector<double> alphas = alpha_grid();
  Tensor base_latents;  // [rows, D] in W
};

// 8-bit image, channels interleaved per pixel, rows top to bottom.
struct ImageGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 or 3
  std::vector<std::uint8_t> pixels;
};

// round(255 * clamp(v, 0, 1)).
std::uint8_t quantize_pixel(double v);

// Tile (r, a) holds G(w_r + alphas[a] n_j): base latents run down the rows
// and alphas across the columns. alpha == 0 renders w_r unchanged.
ImageGrid traversal_grid(const GeneratorNetwork& gen, const DirectionSet& dirs, const TraversalSpec& spec);

// Binary P6 (RGB) or P5 (grayscale), maxval 255.
std::vector<std::uint8_t> encode_pnm(const ImageGrid& grid);
// Throws std::runtime_error on I/O failure.
void write_pnm(const std::filesystem::path& path, const ImageGrid& grid);

}  // namespace latdis

#endif  // LATDIS_TRAVERSAL_HPP_
