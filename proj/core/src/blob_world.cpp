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

#include "latdis/blob_world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "latdis/linalg.hpp"

namespace latdis {

void FactorSpec::validate() const {
  if (factors.empty()) throw std::invalid_argument("factor spec needs at least one factor");
  if (levels < 1) throw std::invalid_argument("factor spec needs at least one level");
  for (const auto& f : factors) {
    if (!(f.hi > f.lo)) throw std::invalid_argument("factor '" + f.name + "' has a degenerate range");
  }
}

LabelMatrix quantize_factors(const Tensor& factors, const FactorSpec& spec) {
  if (factors.ndim() != 2 || factors.dim(1) != spec.count()) {
    throw ShapeError("quantize_factors: expected [n, " + std::to_string(spec.count()) + "], got " +
                     shape_str(factors.shape()));
  }
  LabelMatrix out(factors.dim(0), factors.dim(1));
  const auto levels = static_cast<double>(spec.levels);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      const FactorRange& f = spec.factors[j];
      const double t = (factors.at(i, j) - f.lo) / (f.hi - f.lo);
      const double level = std::clamp(std::floor(t * levels), 0.0, levels - 1.0);
      out.at(i, j) = static_cast<int>(level);
    }
  }
  return out;
}

FactorSpec default_blob_factors(std::size_t image_size) {
  const double s = static_cast<double>(image_size);
  FactorSpec spec;
  spec.factors = {
      {"x_position", s / 4.0, 3.0 * s / 4.0 - 1.0},
      {"y_position", s / 4.0, 3.0 * s / 4.0 - 1.0},
      {"width", 1.5 * s / 32.0, 4.5 * s / 32.0},
      {"hue", 0.0, std::numbers::pi},
      {"brightness", 0.0, 1.0},
  };
  return spec;
}

BlobWorld make_blob_world(const BlobWorldConfig& cfg) {
  const std::size_t m = BlobRender::kFactors;
  if (cfg.latent_dim < m) throw std::invalid_argument("blob world needs latent_dim >= 5");
  if (cfg.image_size < 8) throw std::invalid_argument("blob world needs image_size >= 8");
  if (cfg.singular_values.size() != m || cfg.factor_spread.size() != m ||
      cfg.factor_sharpness.size() != m) {
    throw std::invalid_argument("blob world needs 5 singular values, spreads and sharpnesses");
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!(cfg.singular_values[j] > 0.0)) throw std::invalid_argument("singular values must be positive");
    if (j > 0 && !(cfg.singular_values[j] < cfg.singular_values[j - 1])) {
      throw std::invalid_argument("singular values must be strictly decreasing");
    }
    if (!(cfg.factor_spread[j] > 0.0) || !(cfg.factor_sharpness[j] > 0.0)) {
      throw std::invalid_argument("factor spreads and sharpnesses must be positive");
    }
  }
  if (!(cfg.null_spread > 0.0)) throw std::invalid_argument("null spread must be positive");
  if (!(cfg.reference_truncation > 0.0 && cfg.reference_truncation <= 1.0)) {
    throw std::invalid_argument("reference truncation must lie in (0, 1]");
  }

  BlobWorld w;
  w.spec = default_blob_factors(cfg.image_size);
  w.spec.levels = cfg.levels;
  w.height = w.width = cfg.image_size;
  w.latent_dim = cfg.latent_dim;
  if (cfg.identity_mixing) {
    w.mixing = linalg::identity(cfg.latent_dim);
  } else {
    Rng rng(cfg.seed, 0x6d6978);
    w.mixing = linalg::random_orthogonal(cfg.latent_dim, rng);
  }
  w.scales.assign(cfg.latent_dim, 0.0);
  w.spread.assign(cfg.latent_dim, cfg.null_spread);
  for (std::size_t j = 0; j < m; ++j) {
    w.scales[j] = cfg.singular_values[j];
    w.spread[j] = cfg.factor_spread[j];
    w.gains.push_back(cfg.factor_sharpness[j] /
                      (cfg.singular_values[j] * cfg.factor_spread[j] * cfg.reference_truncation));
  }
  return w;
}

Tensor blob_render(std::span<const double> factors, const BlobWorld& world) {
  if (factors.size() != world.spec.count()) {
    throw ShapeError("blob_render expects " + std::to_string(world.spec.count()) + " factors");
  }
  for (std::size_t j = 0; j < factors.size(); ++j) {
    const FactorRange& f = world.spec.factors[j];
    if (!(factors[j] >= f.lo && factors[j] <= f.hi)) {
      throw std::out_of_range("factor '" + f.name + "' = " + std::to_string(factors[j]) +
                              " outside [" + std::to_string(f.lo) + ", " + std::to_string(f.hi) + "]");
    }
  }
  const BlobRender r(world.height, world.width);
  const Tensor in({1, factors.size()}, std::vector<double>(factors.begin(), factors.end()));
  return r.forward(in).reshaped({BlobRender::kChannels, world.height, world.width});
}

GeneratorNetwork make_entangled_generator(const BlobWorld& world, double truncation) {
  const std::size_t d = world.latent_dim;
  const std::size_t m = world.spec.count();
  const Tensor& q = world.mixing;

  // Style: Q^T diag(spread) Q (symmetric, so it is its own weight layout).
  Tensor style_w({d, d});
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += q.at(k, r) * world.spread[k] * q.at(k, c);
      style_w.at(r, c) = s;
    }
  }
  Network style({d});
  style.add(Dense(style_w, Tensor({d})));

  Tensor mix({m, d});
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t c = 0; c < d; ++c) mix.at(j, c) = world.scales[j] * q.at(j, c);
  }
  Tensor range_scale({m});
  Tensor range_bias({m});
  for (std::size_t j = 0; j < m; ++j) {
    range_scale[j] = world.spec.factors[j].hi - world.spec.factors[j].lo;
    range_bias[j] = world.spec.factors[j].lo;
  }
  Network synth({d});
  synth.add(Dense(mix, Tensor({m})));
  synth.add(Affine(Tensor::vector(std::span<const double>(world.gains)), Tensor({m})));
  synth.add(Sigmoid());
  synth.add(Affine(range_scale, range_bias));
  synth.add(BlobRender(world.height, world.width));

  // The style map is linear without bias, so the mean latent is exactly 0.
  return GeneratorNetwork(std::move(style), std::move(synth), truncation, Tensor({d}));
}

Tensor ground_truth_directions(const BlobWorld& world) {
  const std::size_t m = world.spec.count();
  Tensor n({world.latent_dim, m});
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t r = 0; r < world.latent_dim; ++r) n.at(r, j) = world.mixing.at(j, r);
  }
  return n;
}

Tensor latent_factors(const GeneratorNetwork& gen, const Tensor& w) {
  return gen.synthesize(w, kFactorTap);
}

std::vector<double> readout_factors(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != BlobRender::kChannels) {
    throw ShapeError("readout_factors expects a [3, H, W] image");
  }
  const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
  auto total = [&](std::size_t py, std::size_t px) {
    double s = 0.0;
    for (std::size_t c = 0; c < BlobRender::kChannels; ++c) s += image[c * plane + py * w + px];
    return s;
  };
  std::size_t by = 0, bx = 0;
  double best = -1.0;
  for (std::size_t py = 0; py < h; ++py) {
    for (std::size_t px = 0; px < w; ++px) {
      if (total(py, px) > best) {
        best = total(py, px);
        by = py;
        bx = px;
      }
    }
  }
  if (!(best > 0.0)) throw std::domain_error("readout_factors: blank image");
  by = std::clamp<std::size_t>(by, 1, h - 2);
  bx = std::clamp<std::size_t>(bx, 1, w - 2);
  const double l0 = std::log(total(by, bx));
  const double lxm = std::log(total(by, bx - 1)), lxp = std::log(total(by, bx + 1));
  const double lym = std::log(total(by - 1, bx)), lyp = std::log(total(by + 1, bx));
  const double var = -2.0 / ((lxp - 2.0 * l0 + lxm) + (lyp - 2.0 * l0 + lym));
  const double x = static_cast<double>(bx) + 0.5 * (lxp - lxm) * var;
  const double y = static_cast<double>(by) + 0.5 * (lyp - lym) * var;
  const double dx = static_cast<double>(bx) - x, dy = static_cast<double>(by) - y;
  const double g = std::exp(-0.5 * (dx * dx + dy * dy) / var);
  std::array<double, BlobRender::kChannels> amp{};
  double amp_sum = 0.0;
  for (std::size_t c = 0; c < BlobRender::kChannels; ++c) {
    amp[c] = image[c * plane + by * w + bx] / g;
    amp_sum += amp[c];
  }
  const double brightness = amp_sum / 1.5;
  double re = 0.0, im = 0.0;
  for (std::size_t c = 0; c < BlobRender::kChannels; ++c) {
    const double k = (amp[c] / brightness - 0.5) / 0.4;
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(c) / 3.0;
    re += k * std::cos(phase);
    im += k * std::sin(phase);
  }
  double hue = std::atan2(im, re);
  if (hue < 0.0) hue += 2.0 * std::numbers::pi;
  return {x, y, std::sqrt(var), hue, brightness};
}

LabeledDataset make_labeled_dataset(const GeneratorNetwork& gen, const FactorSpec& spec,
                                    std::size_t n, double psi, Rng& rng) {
  LabeledDataset ds;
  ds.latents = sample_latents(gen, n, rng, psi);
  const auto acts = gen.synthesis().trace(ds.latents);
  ds.factors = acts.at(kFactorTap);
  ds.images = acts.back();
  ds.levels = quantize_factors(ds.factors, spec);
  return ds;
}

}  // namespace latdis
