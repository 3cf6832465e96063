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

#ifndef LATDIS_METRICS_HPP_
#define LATDIS_METRICS_HPP_

#include <span>
#include <vector>

#include "latdis/blob_world.hpp"
#include "latdis/tensor.hpp"

namespace latdis {

inline constexpr std::size_t kDefaultBins = 20;
inline constexpr std::size_t kMetricSamples = 10000;

struct DiscreteCodes {
  LabelMatrix indices;                    // [n, k], values in [0, bins)
  std::size_t bins = 0;
  std::vector<std::vector<double>> edges; // per dimension, bins + 1 values
  std::vector<bool> constant;             // dimension had min == max
};

// Uniform-width bins over [min, max] of each column; the maximum lands in
// the top bin. Constant columns map to bin 0 and are flagged.
DiscreteCodes discretize(const Tensor& codes, std::size_t bins = kDefaultBins);

struct MutualInfoMatrix {
  Tensor mi;                            // [k, M], nats
  std::vector<double> code_entropy;     // length k
  std::vector<double> factor_entropy;   // length M
  std::size_t samples = 0;
};

// Plug-in estimates from joint histograms: I = sum p(c, v) ln(p(c, v) / (p(c) p(v))).
MutualInfoMatrix mutual_info_matrix(const LabelMatrix& codes, const LabelMatrix& factors);
MutualInfoMatrix mutual_info_matrix(const DiscreteCodes& codes, const LabelMatrix& factors);

// Plug-in entropy (nats) of one label column.
double discrete_entropy(std::span<const int> labels);

struct MigResult {
  double score = 0.0;
  std::vector<double> per_factor;     // NaN where skipped
  std::vector<std::size_t> skipped;   // factors with zero entropy
};

// Mean over factors of (I[j*, m] - I[j**, m]) / H(v_m). Needs k >= 2.
MigResult mig_details(const MutualInfoMatrix& mi);
double mig(const MutualInfoMatrix& mi);

// Mean over code dims of 1 - sum_{m != m*} I[j, m]^2 / (theta_j^2 (M - 1)),
// theta_j = max_m I[j, m]; dims with theta_j = 0 score 0. Needs M >= 2.
double modularity(const MutualInfoMatrix& mi);

// 1/2 sum |p - q|.
double total_variation(std::span<const double> p, std::span<const double> q);

struct ClassifierConfig {
  std::size_t steps = 500;
  double lr = 0.1;
  double holdout_fraction = 0.5;  // trailing rows score the classifier
};

struct PairUnfairness {
  std::size_t sensitive = 0;
  std::size_t target = 0;
  double score = 0.0;
  std::vector<int> missing_levels;   // sensitive levels absent from held-out rows
};

struct UnfairnessReport {
  std::vector<PairUnfairness> pairs;
  double average = 0.0;
};

// Mean over unordered pairs of sensitive levels (a, b) of
// TV(p(y_hat | v_s = a), p(y_hat | v_s = b)).
PairUnfairness unfairness_from_predictions(std::span<const int> predictions,
                                           std::span<const int> sensitive, std::size_t classes);

// Hard predictions of a multinomial logistic model for factor `target`,
// trained by full-batch gradient descent on standardised codes of the
// leading rows and applied to the held-out rows.
std::vector<int> fit_predict_logistic(const Tensor& codes, const LabelMatrix& factors,
                                      std::size_t target, const ClassifierConfig& cfg);

UnfairnessReport unfairness(const Tensor& codes, const LabelMatrix& factors, std::size_t sensitive,
                            std::size_t target, const ClassifierConfig& cfg = {});
// All ordered (s, t) pairs, s != t; one classifier per target.
UnfairnessReport unfairness_sweep(const Tensor& codes, const LabelMatrix& factors,
                                  const ClassifierConfig& cfg = {});

}  // namespace latdis

#endif  // LATDIS_METRICS_HPP_
