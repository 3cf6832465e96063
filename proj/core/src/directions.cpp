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

#include "latdis/directions.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "latdis/adam.hpp"
#include "latdis/linalg.hpp"

namespace latdis {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kClosedForm: return "cf";
    case Method::kGanSpace: return "gs";
    case Method::kDeepSpectral: return "ds";
    case Method::kLatentDiscovery: return "ld";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "cf") return Method::kClosedForm;
  if (lower == "gs") return Method::kGanSpace;
  if (lower == "ds") return Method::kDeepSpectral;
  if (lower == "ld") return Method::kLatentDiscovery;
  throw std::invalid_argument("unknown discovery method '" + std::string(name) +
                              "' (expected cf, gs, ds or ld)");
}

void DirectionSet::validate() const {
  if (directions.ndim() != 2 || directions.dim(1) > directions.dim(0)) {
    throw std::invalid_argument("direction matrix must be [D, k] with k <= D");
  }
  const double err = linalg::orthonormality_error(directions);
  if (!(err <= 1e-8)) {
    throw std::invalid_argument("direction matrix is not orthonormal (error " + std::to_string(err) + ")");
  }
  if (!values.empty()) {
    if (values.size() != k()) throw std::invalid_argument("direction values must have length k");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0.0 || (i > 0 && values[i] > values[i - 1])) {
        throw std::invalid_argument("direction values must be non-negative and descending");
      }
    }
  }
}

std::uint64_t DirectionSet::hash() const {
  std::uint64_t h = tensor_hash(directions);
  h = tensor_hash(Tensor::vector({static_cast<double>(method), tap ? static_cast<double>(*tap) : -1.0,
                                  static_cast<double>(seed)}),
                  h);
  if (!values.empty()) h = tensor_hash(Tensor::vector(std::span<const double>(values)), h);
  return h ^ base_hash;
}

std::vector<DegenerateBlock> find_degenerate_blocks(const std::vector<double>& values) {
  std::vector<DegenerateBlock> out;
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i + 1;
    while (j < values.size()) {
      const double scale = std::max(std::abs(values[j - 1]), std::numeric_limits<double>::min());
      if (std::abs(values[j - 1] - values[j]) >= kDegenerateRelGap * scale) break;
      ++j;
    }
    if (j - i > 1) out.push_back({i, j - i});
    i = j;
  }
  return out;
}

Tensor orthonormalize(const Tensor& m) { return linalg::orthonormalize(m); }

namespace {

DirectionSet finish(Tensor n, Method method, std::vector<double> values, std::uint64_t seed) {
  linalg::canonicalize_signs(n);
  DirectionSet set;
  set.directions = std::move(n);
  set.method = method;
  set.seed = seed;
  set.degenerate = find_degenerate_blocks(values);
  set.values = std::move(values);
  set.validate();
  return set;
}

}  // namespace

DirectionSet closed_form(const std::vector<Tensor>& blocks, std::size_t k) {
  const Tensor a = linalg::vstack(blocks);
  const std::size_t d = a.dim(1);
  if (k == 0 || k > d) throw std::invalid_argument("closed_form: k must lie in [1, D]");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.dim(0)), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < a.dim(0); ++r) {
    for (std::size_t c = 0; c < d; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a.at(r, c);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(a.dim(0), d)) *
                        std::numeric_limits<double>::epsilon() * (s.size() > 0 ? s(0) : 0.0);
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(s.size()) && s(static_cast<Eigen::Index>(rank)) > cutoff) ++rank;
  if (k > rank) {
    throw std::invalid_argument("closed_form: k = " + std::to_string(k) +
                                " exceeds the rank of the style-input weight (" +
                                std::to_string(rank) + ")");
  }
  Tensor n({d, k});
  std::vector<double> values;
  for (std::size_t j = 0; j < k; ++j) {
    values.push_back(s(static_cast<Eigen::Index>(j)));
    for (std::size_t r = 0; r < d; ++r) {
      n.at(r, j) = svd.matrixV()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    }
  }
  return finish(std::move(n), Method::kClosedForm, std::move(values), 0);
}

DirectionSet closed_form(const GeneratorNetwork& gen, std::size_t k) {
  return closed_form(gen.style_input_weights(), k);
}

DirectionSet ganspace_from_samples(const Tensor& samples, std::size_t k) {
  if (samples.ndim() != 2 || samples.dim(0) < 2) {
    throw ShapeError("ganspace needs at least two sample rows, got " + shape_str(samples.shape()));
  }
  const std::size_t n = samples.dim(0), d = samples.dim(1);
  if (k == 0 || k > d) {
    throw std::invalid_argument("ganspace: k = " + std::to_string(k) + " exceeds latent dim " +
                                std::to_string(d));
  }
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += samples.at(i, c);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  Tensor cov({d, d});
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) row[c] = samples.at(i, c) - mean[c];
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = r; c < d; ++c) cov.at(r, c) += row[r] * row[c];
    }
  }
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r; c < d; ++c) {
      cov.at(r, c) /= static_cast<double>(n - 1);
      cov.at(c, r) = cov.at(r, c);
    }
  }
  const linalg::SymmetricEigen eig = linalg::symmetric_eigen(cov);
  Tensor axes = linalg::leading_columns(eig.vectors, k);
  std::vector<double> values(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(k));
  for (double& v : values) v = std::max(v, 0.0);
  return finish(std::move(axes), Method::kGanSpace, std::move(values), 0);
}

DirectionSet ganspace(const GeneratorNetwork& gen, std::size_t k, Rng& rng, std::size_t n_samples) {
  if (k == 0 || k > gen.latent_dim()) {
    throw std::invalid_argument("ganspace: k = " + std::to_string(k) + " exceeds latent dim " +
                                std::to_string(gen.latent_dim()));
  }
  const Tensor z = rng.normal_tensor({n_samples, gen.latent_dim()});
  DirectionSet set = ganspace_from_samples(gen.style(z), k);
  set.seed = rng.seed();
  return set;
}

DirectionSet deep_spectral(const GeneratorNetwork& gen, std::size_t tap, std::size_t k, Rng& rng,
                           std::optional<Tensor> w0, const PowerSvdOptions& options) {
  const Tensor base = w0 ? *w0 : gen.base_latent();
  const LinearOperatorHandle op = jacobian_operator(gen, base, tap);
  const PowerSvdResult svd = power_svd(op, k, rng, options);
  DirectionSet set = finish(svd.vectors, Method::kDeepSpectral, svd.values, rng.seed());
  set.tap = tap;
  set.base_hash = tensor_hash(base);
  return set;
}

void LdConfig::validate() const {
  if (k == 0) throw std::invalid_argument("ld: k must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ld: lambda must be >= 0");
  if (!(shift_min > 0.0 && shift_max >= shift_min)) {
    throw std::invalid_argument("ld: shift bounds need 0 < shift_min <= shift_max");
  }
  if (iterations == 0) throw std::invalid_argument("ld: iterations must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("ld: batch_size must be >= 1");
  if (!(lr > 0.0) || !(direction_lr > 0.0)) throw std::invalid_argument("ld: learning rates must be positive");
}

Network make_reconstructor(const std::string& tag, const Shape& image_shape, std::size_t k, Rng& rng) {
  if (image_shape.size() != 3 || image_shape[1] % 8 != 0 || image_shape[2] % 8 != 0) {
    throw ShapeError("reconstructor needs [C, H, W] images with H, W divisible by 8, got " +
                     shape_str(image_shape));
  }
  std::size_t c1 = 0, c2 = 0, hidden = 0;
  if (tag == "conv3") {
    c1 = 16, c2 = 32, hidden = 64;
  } else if (tag == "conv3-small") {
    c1 = 8, c2 = 16, hidden = 32;
  } else {
    throw std::invalid_argument("unknown reconstructor architecture '" + tag + "'");
  }
  const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
  const std::size_t c = image_shape[0], h = image_shape[1], w = image_shape[2];
  Network net({2 * c, h, w});
  net.add(Conv2D::random(2 * c, c1, 4, 2, 1, rng, gain));
  net.add(LeakyReLU(0.2));
  net.add(Conv2D::random(c1, c2, 4, 2, 1, rng, gain));
  net.add(LeakyReLU(0.2));
  net.add(Conv2D::random(c2, c2, 4, 2, 1, rng, gain));
  net.add(LeakyReLU(0.2));
  net.add(Reshape({c2 * (h / 8) * (w / 8)}));
  net.add(Dense::random(c2 * (h / 8) * (w / 8), hidden, rng, gain));
  net.add(LeakyReLU(0.2));
  net.add(Dense::random(hidden, k + 1, rng));
  return net;
}

namespace {

struct PairBatch {
  Tensor shifted_latents;            // w + eps n_j
  std::vector<Tensor> shifted_trace; // synthesis activations at w + eps n_j
  Tensor pair;                       // [b, 2C, H, W]
  std::vector<std::size_t> index;
  std::vector<double> shift;
};

PairBatch make_pairs(const GeneratorNetwork& gen, const Tensor& n, const LdConfig& cfg,
                     std::size_t b, Rng& rng, bool keep_trace) {
  PairBatch pb;
  const std::size_t d = gen.latent_dim(), k = n.dim(1);
  const Tensor w = sample_latents(gen, b, rng, gen.truncation());
  pb.shifted_latents = w;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(k));
    const double mag = rng.uniform(cfg.shift_min, cfg.shift_max);
    const double eps = rng.uniform() < 0.5 ? -mag : mag;
    pb.index.push_back(j);
    pb.shift.push_back(eps);
    for (std::size_t r = 0; r < d; ++r) pb.shifted_latents.at(i, r) += eps * n.at(r, j);
  }
  const Tensor x = gen.synthesize(w);
  Tensor x2;
  if (keep_trace) {
    pb.shifted_trace = gen.synthesis().trace(pb.shifted_latents);
    x2 = pb.shifted_trace.back();
  } else {
    x2 = gen.synthesize(pb.shifted_latents);
  }
  const Shape& img = gen.image_shape();
  const std::size_t per = numel(img);
  pb.pair = Tensor({b, 2 * img[0], img[1], img[2]});
  for (std::size_t i = 0; i < b; ++i) {
    std::copy(x.ptr() + i * per, x.ptr() + (i + 1) * per, pb.pair.ptr() + i * 2 * per);
    std::copy(x2.ptr() + i * per, x2.ptr() + (i + 1) * per, pb.pair.ptr() + i * 2 * per + per);
  }
  return pb;
}

struct HeadLoss {
  double value = 0.0;
  Tensor grad;  // [b, k + 1]
  std::size_t correct = 0;
  double shift_abs_err = 0.0;
};

HeadLoss head_loss(const Tensor& out, const std::vector<std::size_t>& index,
                   const std::vector<double>& shift, double lambda) {
  const std::size_t b = out.dim(0), k = out.dim(1) - 1;
  HeadLoss hl;
  hl.grad = Tensor(out.shape());
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    double top = out.at(i, 0);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (out.at(i, c) > top) top = out.at(i, c), arg = c;
    }
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(out.at(i, c) - top);
    const double lse = top + std::log(z);
    hl.value += (lse - out.at(i, index[i])) * inv_b;
    for (std::size_t c = 0; c < k; ++c) {
      const double p = std::exp(out.at(i, c) - lse);
      hl.grad.at(i, c) = (p - (c == index[i] ? 1.0 : 0.0)) * inv_b;
    }
    const double r = out.at(i, k) - shift[i];
    hl.value += lambda * std::abs(r) * inv_b;
    hl.grad.at(i, k) = lambda * (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * inv_b;
    if (arg == index[i]) ++hl.correct;
    hl.shift_abs_err += std::abs(r);
  }
  return hl;
}

Tensor leading_block(const Tensor& q0, const Tensor& rot, std::size_t k) {
  return linalg::leading_columns(linalg::matmul(q0, rot), k);
}

}  // namespace

LdResult latent_discovery(const GeneratorNetwork& gen, const LdConfig& cfg) {
  cfg.validate();
  const std::size_t d = gen.latent_dim(), k = cfg.k;
  if (k > d) throw std::invalid_argument("ld: k exceeds latent dim");
  const Shape& img = gen.image_shape();
  if (img.size() != 3) throw ShapeError("ld needs [C, H, W] generator output");

  Rng init_rng(cfg.seed, 0x6c64);
  Rng data_rng(cfg.seed, 0x6c65);
  const Tensor q0 = linalg::random_orthogonal(d, init_rng);
  LdResult result;
  result.reconstructor = make_reconstructor(cfg.reconstructor, img, k, init_rng);
  Network& recon = result.reconstructor;

  std::vector<Tensor> skew{Tensor({d, d})};  // P; A = P - P^T
  AdamState recon_state(std::span<Tensor* const>(recon.parameters()), AdamConfig{.lr = cfg.lr});
  AdamState skew_state(std::span<const Tensor>(skew), AdamConfig{.lr = cfg.direction_lr});

  const std::size_t per = numel(img);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Tensor a({d, d});
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) a.at(r, c) = skew[0].at(r, c) - skew[0].at(c, r);
    }
    const Tensor rot = linalg::cayley(a);
    const Tensor n = leading_block(q0, rot, k);

    const PairBatch pb = make_pairs(gen, n, cfg, cfg.batch_size, data_rng, true);
    const auto rtrace = recon.trace(pb.pair);
    const HeadLoss hl = head_loss(rtrace.back(), pb.index, pb.shift, cfg.lambda);
    if (!std::isfinite(hl.value)) {
      throw std::runtime_error("latent_discovery: non-finite loss at iteration " + std::to_string(it));
    }
    result.loss_trace.push_back(hl.value);

    std::vector<Tensor> rgrads = recon.zero_gradients();
    const Tensor gin = recon.backward(rtrace, hl.grad, &rgrads, true);

    // Gradient reaching the shifted image, then the shifted latent.
    const std::size_t b = cfg.batch_size;
    Shape xs{b};
    xs.insert(xs.end(), img.begin(), img.end());
    Tensor gx2(xs);
    for (std::size_t i = 0; i < b; ++i) {
      std::copy(gin.ptr() + i * 2 * per + per, gin.ptr() + (i + 1) * 2 * per, gx2.ptr() + i * per);
    }
    const Tensor gw2 = gen.synthesis().backward(pb.shifted_trace, gx2, nullptr, true);
    Tensor grad_q({d, d});  // dL/d rot, only the first k columns are live
    Tensor grad_n({d, k});
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t r = 0; r < d; ++r) grad_n.at(r, pb.index[i]) += pb.shift[i] * gw2.at(i, r);
    }
    const Tensor gq_k = linalg::matmul_tn(q0, grad_n);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < k; ++c) grad_q.at(r, c) = gq_k.at(r, c);
    }
    const Tensor grad_a = linalg::cayley_backward(a, rot, grad_q);
    std::vector<Tensor> grad_p{Tensor({d, d})};
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) grad_p[0].at(r, c) = grad_a.at(r, c) - grad_a.at(c, r);
    }
    adam_step(std::span<Tensor* const>(recon.parameters()), rgrads, recon_state);
    adam_step(std::span<Tensor>(skew), grad_p, skew_state);
  }

  Tensor a({d, d});
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) a.at(r, c) = skew[0].at(r, c) - skew[0].at(c, r);
  }
  const Tensor n_raw = leading_block(q0, linalg::cayley(a), k);

  // Held-out pairs use the trained (pre-polish) directions.
  Rng eval_rng(cfg.seed, 0x6c66);
  std::size_t correct = 0, seen = 0;
  double abs_err = 0.0;
  while (seen < cfg.heldout_pairs) {
    const std::size_t b = std::min<std::size_t>(64, cfg.heldout_pairs - seen);
    const PairBatch pb = make_pairs(gen, n_raw, cfg, b, eval_rng, false);
    const HeadLoss hl = head_loss(recon.forward_batch(pb.pair), pb.index, pb.shift, cfg.lambda);
    correct += hl.correct;
    abs_err += hl.shift_abs_err;
    seen += b;
  }
  result.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
  result.heldout_shift_mae = abs_err / static_cast<double>(seen);

  result.directions = finish(linalg::orthonormalize(n_raw), Method::kLatentDiscovery, {}, cfg.seed);
  return result;
}

}  // namespace latdis
