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

#include "latdis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace latdis {

namespace {

std::size_t label_count(std::span<const int> labels) {
  int top = -1;
  for (int v : labels) {
    if (v < 0) throw std::invalid_argument("discrete labels must be non-negative");
    top = std::max(top, v);
  }
  return static_cast<std::size_t>(top + 1);
}

std::vector<int> column(const LabelMatrix& m, std::size_t c) {
  std::vector<int> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = m.at(r, c);
  return out;
}

double entropy_from_counts(const std::vector<std::size_t>& counts, double n) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double pair_mi(std::span<const int> a, std::span<const int> b) {
  const std::size_t na = label_count(a), nb = label_count(b);
  std::vector<std::size_t> joint(na * nb, 0), ca(na, 0), cb(nb, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[static_cast<std::size_t>(a[i]) * nb + static_cast<std::size_t>(b[i])];
    ++ca[static_cast<std::size_t>(a[i])];
    ++cb[static_cast<std::size_t>(b[i])];
  }
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (std::size_t x = 0; x < na; ++x) {
    for (std::size_t y = 0; y < nb; ++y) {
      const std::size_t c = joint[x * nb + y];
      if (c == 0) continue;
      const double cxy = static_cast<double>(c);
      mi += cxy / n * std::log(cxy * n / (static_cast<double>(ca[x]) * static_cast<double>(cb[y])));
    }
  }
  return std::max(mi, 0.0);
}

}  // namespace

DiscreteCodes discretize(const Tensor& codes, std::size_t bins) {
  if (codes.ndim() != 2) throw ShapeError("discretize expects [n, k] codes");
  if (bins == 0) throw std::invalid_argument("discretize needs at least one bin");
  codes.require_finite("codes");
  const std::size_t n = codes.dim(0), k = codes.dim(1);
  DiscreteCodes dc;
  dc.indices = LabelMatrix(n, k);
  dc.bins = bins;
  dc.constant.assign(k, false);
  const double b = static_cast<double>(bins);
  for (std::size_t j = 0; j < k; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, codes.at(i, j));
      hi = std::max(hi, codes.at(i, j));
    }
    std::vector<double> edges(bins + 1);
    if (!(hi > lo)) {
      dc.constant[j] = true;
      for (std::size_t e = 0; e <= bins; ++e) edges[e] = lo + static_cast<double>(e);
      dc.edges.push_back(std::move(edges));
      continue;  // every index stays 0
    }
    for (std::size_t e = 0; e <= bins; ++e) edges[e] = lo + (hi - lo) * static_cast<double>(e) / b;
    dc.edges.push_back(std::move(edges));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (codes.at(i, j) - lo) / (hi - lo);
      dc.indices.at(i, j) = static_cast<int>(std::clamp(std::floor(t * b), 0.0, b - 1.0));
    }
  }
  return dc;
}

double discrete_entropy(std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("entropy of an empty sample");
  std::vector<std::size_t> counts(label_count(labels), 0);
  for (int v : labels) ++counts[static_cast<std::size_t>(v)];
  return entropy_from_counts(counts, static_cast<double>(labels.size()));
}

MutualInfoMatrix mutual_info_matrix(const LabelMatrix& codes, const LabelMatrix& factors) {
  if (codes.rows == 0 || factors.rows == 0) throw std::invalid_argument("mutual_info_matrix: empty input");
  if (codes.rows != factors.rows) {
    throw ShapeError("mutual_info_matrix: " + std::to_string(codes.rows) + " code rows vs " +
                     std::to_string(factors.rows) + " factor rows");
  }
  MutualInfoMatrix out;
  out.samples = codes.rows;
  out.mi = Tensor({codes.cols, factors.cols});
  std::vector<std::vector<int>> fcols;
  for (std::size_t m = 0; m < factors.cols; ++m) {
    fcols.push_back(column(factors, m));
    out.factor_entropy.push_back(discrete_entropy(fcols.back()));
  }
  for (std::size_t j = 0; j < codes.cols; ++j) {
    const std::vector<int> c = column(codes, j);
    out.code_entropy.push_back(discrete_entropy(c));
    for (std::size_t m = 0; m < factors.cols; ++m) out.mi.at(j, m) = pair_mi(c, fcols[m]);
  }
  return out;
}

MutualInfoMatrix mutual_info_matrix(const DiscreteCodes& codes, const LabelMatrix& factors) {
  return mutual_info_matrix(codes.indices, factors);
}

MigResult mig_details(const MutualInfoMatrix& mi) {
  const std::size_t k = mi.mi.dim(0), m = mi.mi.dim(1);
  if (k < 2) throw std::invalid_argument("mig needs at least two code dimensions");
  MigResult out;
  out.per_factor.assign(m, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> col(k);
  for (std::size_t f = 0; f < m; ++f) {
    if (!(mi.factor_entropy[f] > 0.0)) {
      out.skipped.push_back(f);
      continue;
    }
    for (std::size_t j = 0; j < k; ++j) col[j] = mi.mi.at(j, f);
    std::partial_sort(col.begin(), col.begin() + 2, col.end(), std::greater<>());
    out.per_factor[f] = (col[0] - col[1]) / mi.factor_entropy[f];
    sum += out.per_factor[f];
    ++used;
  }
  out.score = used > 0 ? sum / static_cast<double>(used) : 0.0;
  return out;
}

double mig(const MutualInfoMatrix& mi) { return mig_details(mi).score; }

double modularity(const MutualInfoMatrix& mi) {
  const std::size_t k = mi.mi.dim(0), m = mi.mi.dim(1);
  if (k == 0) throw std::invalid_argument("modularity needs at least one code dimension");
  if (m < 2) throw std::invalid_argument("modularity needs at least two factors");
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t top = 0;
    for (std::size_t f = 1; f < m; ++f) {
      if (mi.mi.at(j, f) > mi.mi.at(j, top)) top = f;
    }
    const double theta = mi.mi.at(j, top);
    if (!(theta > 0.0)) continue;
    double spill = 0.0;
    for (std::size_t f = 0; f < m; ++f) {
      if (f != top) spill += mi.mi.at(j, f) * mi.mi.at(j, f);
    }
    total += 1.0 - spill / (theta * theta * static_cast<double>(m - 1));
  }
  return total / static_cast<double>(k);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("total_variation: distributions differ in support");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

PairUnfairness unfairness_from_predictions(std::span<const int> predictions,
                                           std::span<const int> sensitive, std::size_t classes) {
  if (predictions.size() != sensitive.size() || predictions.empty()) {
    throw ShapeError("unfairness: predictions and sensitive labels must be non-empty and aligned");
  }
  const std::size_t levels = label_count(sensitive);
  std::vector<std::vector<double>> dist(levels, std::vector<double>(classes, 0.0));
  std::vector<std::size_t> count(levels, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto y = static_cast<std::size_t>(predictions[i]);
    if (predictions[i] < 0 || y >= classes) throw std::out_of_range("unfairness: prediction out of range");
    const auto a = static_cast<std::size_t>(sensitive[i]);
    dist[a][y] += 1.0;
    ++count[a];
  }
  PairUnfairness out;
  std::vector<std::size_t> present;
  for (std::size_t a = 0; a < levels; ++a) {
    if (count[a] == 0) {
      out.missing_levels.push_back(static_cast<int>(a));
      continue;
    }
    for (double& v : dist[a]) v /= static_cast<double>(count[a]);
    present.push_back(a);
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      sum += total_variation(dist[present[i]], dist[present[j]]);
      ++pairs;
    }
  }
  out.score = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
  return out;
}

std::vector<int> fit_predict_logistic(const Tensor& codes, const LabelMatrix& factors,
                                      std::size_t target, const ClassifierConfig& cfg) {
  if (codes.ndim() != 2 || codes.dim(0) != factors.rows) {
    throw ShapeError("logistic: codes and factors must have the same row count");
  }
  if (target >= factors.cols) throw std::out_of_range("logistic: target factor index out of range");
  const std::size_t n = codes.dim(0), k = codes.dim(1);
  const auto holdout = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(n)));
  if (holdout == 0 || holdout >= n) {
    throw std::invalid_argument("logistic: holdout fraction leaves no training or held-out rows");
  }
  const std::size_t n_train = n - holdout;
  const std::vector<int> y = column(factors, target);
  const std::size_t classes = label_count(y);

  // Standardise with training statistics; constant features become 0.
  std::vector<double> mean(k, 0.0), scale(k, 0.0);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t c = 0; c < k; ++c) mean[c] += codes.at(i, c);
  }
  for (double& v : mean) v /= static_cast<double>(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t c = 0; c < k; ++c) scale[c] += (codes.at(i, c) - mean[c]) * (codes.at(i, c) - mean[c]);
  }
  for (double& v : scale) {
    const double sd = std::sqrt(v / static_cast<double>(n_train));
    v = sd > 0.0 ? 1.0 / sd : 0.0;
  }
  Tensor x({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) x.at(i, c) = (codes.at(i, c) - mean[c]) * scale[c];
  }

  std::vector<double> w(k * classes, 0.0), bias(classes, 0.0);
  std::vector<double> gw(k * classes), gb(classes), logits(classes);
  const double inv_n = 1.0 / static_cast<double>(n_train);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n_train; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < classes; ++c) {
        double z = bias[c];
        for (std::size_t f = 0; f < k; ++f) z += x.at(i, f) * w[f * classes + c];
        logits[c] = z;
        top = std::max(top, z);
      }
      double norm = 0.0;
      for (double& z : logits) norm += (z = std::exp(z - top));
      for (std::size_t c = 0; c < classes; ++c) {
        const double err = logits[c] / norm - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
        gb[c] += err;
        for (std::size_t f = 0; f < k; ++f) gw[f * classes + c] += err * x.at(i, f);
      }
    }
    for (std::size_t c = 0; c < classes; ++c) bias[c] -= cfg.lr * gb[c] * inv_n;
    for (std::size_t p = 0; p < w.size(); ++p) w[p] -= cfg.lr * gw[p] * inv_n;
  }

  std::vector<int> pred(holdout);
  for (std::size_t i = 0; i < holdout; ++i) {
    std::size_t best = 0;
    double best_z = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) {
      double z = bias[c];
      for (std::size_t f = 0; f < k; ++f) z += x.at(n_train + i, f) * w[f * classes + c];
      if (z > best_z) best_z = z, best = c;
    }
    pred[i] = static_cast<int>(best);
  }
  return pred;
}

namespace {

PairUnfairness score_pair(const std::vector<int>& pred, const LabelMatrix& factors, std::size_t s,
                          std::size_t t) {
  const std::size_t n_train = factors.rows - pred.size();
  std::vector<int> sens(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) sens[i] = factors.at(n_train + i, s);
  const std::size_t classes = label_count(column(factors, t));
  PairUnfairness p = unfairness_from_predictions(pred, sens, classes);
  p.sensitive = s;
  p.target = t;
  return p;
}

}  // namespace

UnfairnessReport unfairness(const Tensor& codes, const LabelMatrix& factors, std::size_t sensitive,
                            std::size_t target, const ClassifierConfig& cfg) {
  if (sensitive == target) throw std::invalid_argument("unfairness: sensitive and target must differ");
  if (sensitive >= factors.cols) throw std::out_of_range("unfairness: sensitive factor index out of range");
  const std::vector<int> pred = fit_predict_logistic(codes, factors, target, cfg);
  UnfairnessReport r;
  r.pairs.push_back(score_pair(pred, factors, sensitive, target));
  r.average = r.pairs.front().score;
  return r;
}

UnfairnessReport unfairness_sweep(const Tensor& codes, const LabelMatrix& factors,
                                  const ClassifierConfig& cfg) {
  if (factors.cols < 2) throw std::invalid_argument("unfairness sweep needs at least two factors");
  UnfairnessReport r;
  double sum = 0.0;
  for (std::size_t t = 0; t < factors.cols; ++t) {
    const std::vector<int> pred = fit_predict_logistic(codes, factors, t, cfg);
    for (std::size_t s = 0; s < factors.cols; ++s) {
      if (s == t) continue;
      r.pairs.push_back(score_pair(pred, factors, s, t));
      sum += r.pairs.back().score;
    }
  }
  r.average = sum / static_cast<double>(r.pairs.size());
  return r;
}

}  // namespace latdis
