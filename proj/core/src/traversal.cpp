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

#include "latdis/traversal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace latdis {

std::vector<double> alpha_grid(std::size_t n, double lo, double hi) {
  if (n == 0) throw std::invalid_argument("alpha grid needs at least one value");
  if (n == 1) return {0.5 * (lo + hi)};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

std::uint8_t quantize_pixel(double v) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

ImageGrid traversal_grid(const GeneratorNetwork& gen, const DirectionSet& dirs, const TraversalSpec& spec) {
  const std::size_t d = gen.latent_dim();
  if (dirs.directions.ndim() != 2 || dirs.latent_dim() != d) {
    throw ShapeError("traversal: directions do not match the generator latent size");
  }
  if (spec.direction >= dirs.k()) {
    throw std::out_of_range("traversal: direction " + std::to_string(spec.direction) + " of " +
                            std::to_string(dirs.k()));
  }
  if (spec.base_latents.ndim() != 2 || spec.base_latents.dim(1) != d || spec.base_latents.dim(0) == 0) {
    throw ShapeError("traversal: base latents must be [rows, " + std::to_string(d) + "]");
  }
  if (spec.alphas.empty()) throw std::invalid_argument("traversal: empty alpha grid");
  for (double a : spec.alphas) {
    if (!std::isfinite(a)) throw NonFiniteError("traversal: non-finite alpha");
  }
  const Shape& img = gen.image_shape();
  if (img.size() != 3 || (img[0] != 1 && img[0] != 3)) {
    throw ShapeError("traversal needs [1|3, H, W] images, got " + shape_str(img));
  }
  const std::size_t c = img[0], h = img[1], w = img[2];
  const std::size_t rows = spec.base_latents.dim(0), cols = spec.alphas.size();

  Tensor batch({rows * cols, d});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t a = 0; a < cols; ++a) {
      const double alpha = spec.alphas[a];
      for (std::size_t i = 0; i < d; ++i) {
        const double base = spec.base_latents.at(r, i);
        batch.at(r * cols + a, i) = alpha == 0.0 ? base : base + alpha * dirs.directions.at(i, spec.direction);
      }
    }
  }
  const Tensor images = gen.synthesize(batch);

  ImageGrid grid{cols * w, rows * h, c, {}};
  grid.pixels.resize(grid.width * grid.height * c);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t a = 0; a < cols; ++a) {
      const double* src = images.ptr() + (r * cols + a) * c * h * w;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t gy = r * h + y, gx = a * w + x;
          for (std::size_t ch = 0; ch < c; ++ch) {
            grid.pixels[(gy * grid.width + gx) * c + ch] = quantize_pixel(src[(ch * h + y) * w + x]);
          }
        }
      }
    }
  }
  return grid;
}

std::vector<std::uint8_t> encode_pnm(const ImageGrid& grid) {
  if (grid.channels != 1 && grid.channels != 3) throw std::invalid_argument("pnm needs 1 or 3 channels");
  if (grid.pixels.size() != grid.width * grid.height * grid.channels) {
    throw std::invalid_argument("pnm pixel buffer does not match its dimensions");
  }
  const std::string header = std::string(grid.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(grid.width) +
                             " " + std::to_string(grid.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), grid.pixels.begin(), grid.pixels.end());
  return out;
}

void write_pnm(const std::filesystem::path& path, const ImageGrid& grid) {
  const auto bytes = encode_pnm(grid);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace latdis
