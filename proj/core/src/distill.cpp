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

#include "latdis/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "latdis/adam.hpp"
#include "latdis/linalg.hpp"

namespace latdis {

namespace {

constexpr std::size_t kChunk = 512;

Shape with_batch(std::size_t b, const Shape& sample) {
  Shape s{b};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

Tensor gather_rows(const Tensor& src, std::span<const std::size_t> idx) {
  Shape s = src.shape();
  s[0] = idx.size();
  Tensor out(s);
  const std::size_t per = src.size() / src.dim(0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* from = src.ptr() + idx[i] * per;
    std::copy(from, from + per, out.ptr() + i * per);
  }
  return out;
}

double mean_column_variance(const Tensor& t, std::size_t begin, std::size_t end) {
  const std::size_t k = t.dim(1);
  const double n = static_cast<double>(end - begin);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double mean = 0.0;
    for (std::size_t i = begin; i < end; ++i) mean += t.at(i, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = begin; i < end; ++i) var += (t.at(i, c) - mean) * (t.at(i, c) - mean);
    total += var / n;
  }
  return total / static_cast<double>(k);
}

}  // namespace

Tensor project_codes(const Tensor& w, const Tensor& n) {
  if (w.ndim() != 2 || n.ndim() != 2 || w.dim(1) != n.dim(0)) {
    throw ShapeError("project_codes: latents " + shape_str(w.shape()) + " vs directions " +
                     shape_str(n.shape()));
  }
  return linalg::matmul(w, n);
}

Tensor project_codes(const Tensor& w, const DirectionSet& dirs) {
  return project_codes(w, dirs.directions);
}

std::uint64_t SyntheticDataset::hash() const {
  std::uint64_t h = latents ? tensor_hash(*latents) : 0;
  if (images) h = tensor_hash(*images, h);
  return tensor_hash(targets, h);
}

SyntheticDataset build_synthetic_dataset(const GeneratorNetwork& gen, const DirectionSet& dirs,
                                         std::size_t n, double psi, Rng& rng) {
  if (n == 0) throw std::invalid_argument("build_synthetic_dataset: n must be at least 1");
  if (dirs.latent_dim() != gen.latent_dim()) {
    throw ShapeError("build_synthetic_dataset: directions are " + shape_str(dirs.directions.shape()) +
                     " but the generator latent dim is " + std::to_string(gen.latent_dim()));
  }
  SyntheticDataset ds;
  ds.provenance = {gen.hash(), dirs.hash(), psi, rng.seed(), rng.stream()};
  auto latents = std::make_shared<Tensor>(sample_latents(gen, n, rng, psi));
  auto images = std::make_shared<Tensor>(with_batch(n, gen.image_shape()));
  const std::size_t per = numel(gen.image_shape());
  for (std::size_t b = 0; b < n; b += kChunk) {
    const std::size_t e = std::min(n, b + kChunk);
    const Tensor x = gen.synthesize(latents->slice_rows(b, e));
    std::copy(x.data().begin(), x.data().end(), images->ptr() + b * per);
  }
  ds.targets = project_codes(*latents, dirs);
  ds.latents = std::move(latents);
  ds.images = std::move(images);
  return ds;
}

SyntheticDataset retarget(const SyntheticDataset& ds, const DirectionSet& dirs) {
  SyntheticDataset out;
  out.latents = ds.latents;
  out.images = ds.images;
  out.targets = project_codes(*ds.latents, dirs);
  out.provenance = ds.provenance;
  out.provenance.directions_hash = dirs.hash();
  return out;
}

Encoder make_encoder(const std::string& arch, const Shape& image_shape, std::size_t k, Rng& rng) {
  if (image_shape.size() != 3) throw ShapeError("encoder input must be [C, H, W]");
  if (k == 0) throw std::invalid_argument("encoder code dim must be >= 1");
  const std::size_t c = image_shape[0], h = image_shape[1], w = image_shape[2];
  const double relu_gain = std::sqrt(2.0);
  Encoder enc{Network(image_shape), arch};
  Network& net = enc.net;
  auto conv_stack = [&](const std::vector<std::size_t>& widths, std::size_t side) {
    if (h != side || w != side) {
      throw ShapeError("encoder '" + arch + "' expects " + std::to_string(side) + "x" +
                       std::to_string(side) + " images, got " + shape_str(image_shape));
    }
    std::size_t in = c;
    for (std::size_t out : widths) {
      net.add(Conv2D::random(in, out, 4, 2, 1, rng, relu_gain));
      net.add(LeakyReLU(0.0));
      in = out;
    }
    const std::size_t flat = numel(net.output_shape());
    net.add(Reshape({flat}));
    net.add(Dense::random(flat, 256, rng, relu_gain));
    net.add(LeakyReLU(0.0));
    net.add(Dense::random(256, k, rng));
  };
  if (arch == "desk32") {
    conv_stack({32, 32, 64}, 32);
  } else if (arch == "full64") {
    conv_stack({32, 32, 64, 64}, 64);
  } else if (arch == "compact") {
    if (h % 2 != 0 || w % 2 != 0) throw ShapeError("compact encoder needs even image sides");
    net.add(AvgPool2D(2));
    const std::size_t flat = c * (h / 2) * (w / 2);
    net.add(Reshape({flat}));
    net.add(Dense::random(flat, 128, rng, relu_gain));
    net.add(LeakyReLU(0.0));
    net.add(Dense::random(128, 64, rng, relu_gain));
    net.add(LeakyReLU(0.0));
    net.add(Dense::random(64, k, rng));
  } else {
    throw std::invalid_argument("unknown encoder architecture '" + arch +
                                "' (expected desk32, full64 or compact)");
  }
  return enc;
}

void EncoderHyper::validate() const {
  if (batch_size == 0) throw std::invalid_argument("encoder batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("encoder lr must be positive");
  if (epochs == 0) throw std::invalid_argument("encoder epochs must be >= 1");
  if (decay_every == 0) throw std::invalid_argument("encoder decay_every must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("encoder gamma must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("encoder holdout_fraction must lie in [0, 1)");
  }
}

Tensor encode(const Encoder& enc, const Tensor& images) {
  if (images.ndim() != enc.input_shape().size() + 1 ||
      !std::equal(enc.input_shape().begin(), enc.input_shape().end(), images.shape().begin() + 1)) {
    throw ShapeError("encode: images " + shape_str(images.shape()) + " do not match encoder input " +
                     shape_str(enc.input_shape()));
  }
  const std::size_t n = images.dim(0), k = enc.code_dim();
  Tensor codes({n, k});
  for (std::size_t b = 0; b < n; b += kChunk) {
    const std::size_t e = std::min(n, b + kChunk);
    const Tensor out = enc.net.forward_batch(images.slice_rows(b, e));
    std::copy(out.data().begin(), out.data().end(), codes.ptr() + b * k);
  }
  return codes;
}

double encoder_mse(const Encoder& enc, const Tensor& images, const Tensor& targets) {
  const Tensor codes = encode(enc, images);
  if (codes.shape() != targets.shape()) {
    throw ShapeError("encoder_mse: codes " + shape_str(codes.shape()) + " vs targets " +
                     shape_str(targets.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < codes.size(); ++i) s += (codes[i] - targets[i]) * (codes[i] - targets[i]);
  return s / static_cast<double>(codes.size());
}

std::pair<Encoder, TrainReport> train_encoder(const SyntheticDataset& ds, Encoder enc,
                                              const EncoderHyper& hyper) {
  hyper.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = ds.size();
  if (n == 0 || !ds.images) throw std::invalid_argument("train_encoder: empty dataset");
  if (enc.code_dim() != ds.targets.dim(1)) {
    throw ShapeError("train_encoder: encoder emits " + std::to_string(enc.code_dim()) +
                     " codes but targets have " + std::to_string(ds.targets.dim(1)));
  }
  const Tensor& images = *ds.images;
  std::size_t holdout = static_cast<std::size_t>(std::floor(hyper.holdout_fraction * static_cast<double>(n)));
  if (holdout >= n) holdout = n - 1;
  const std::size_t n_train = n - holdout;

  TrainReport report;
  Tensor held_images, held_targets;
  if (holdout > 0) {
    held_images = images.slice_rows(n_train, n);
    held_targets = ds.targets.slice_rows(n_train, n);
    report.initial_heldout_mse = encoder_mse(enc, held_images, held_targets);
    report.heldout_target_variance = mean_column_variance(ds.targets, n_train, n);
  }

  Rng rng(hyper.seed, 0x656e63);
  std::vector<std::size_t> order(n_train);
  AdamState state(std::span<Tensor* const>(enc.net.parameters()), AdamConfig{.lr = hyper.lr});
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    state.config.lr = hyper.lr * std::pow(hyper.gamma, static_cast<double>(epoch / hyper.decay_every));
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n_train; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < n_train; b += hyper.batch_size) {
      const std::size_t e = std::min(n_train, b + hyper.batch_size);
      const std::span<const std::size_t> idx(order.data() + b, e - b);
      const ParamGradients pg =
          param_gradients(enc.net, gather_rows(images, idx), LossSpec::mse(gather_rows(ds.targets, idx)));
      if (!std::isfinite(pg.loss)) {
        throw std::runtime_error("train_encoder: non-finite loss in epoch " + std::to_string(epoch));
      }
      sum += pg.loss * static_cast<double>(e - b);
      adam_step(std::span<Tensor* const>(enc.net.parameters()), pg.grads, state);
    }
    report.epoch_train_mse.push_back(sum / static_cast<double>(n_train));
  }
  if (holdout > 0) report.heldout_mse = encoder_mse(enc, held_images, held_targets);
  report.param_hash = enc.net.hash();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(enc), std::move(report)};
}

std::pair<Encoder, TrainReport> train_encoder(const SyntheticDataset& ds, const std::string& arch,
                                              const EncoderHyper& hyper) {
  if (!ds.images) throw std::invalid_argument("train_encoder: empty dataset");
  Rng rng(hyper.seed, 0x696e6974);
  const Shape sample(ds.images->shape().begin() + 1, ds.images->shape().end());
  return train_encoder(ds, make_encoder(arch, sample, ds.targets.dim(1), rng), hyper);
}

}  // namespace latdis
