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

#ifndef LATDIS_PIPELINE_HPP_
#define LATDIS_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "latdis/blob_world.hpp"
#include "latdis/config.hpp"
#include "latdis/directions.hpp"

namespace latdis {

// Random stream ids, shared by the pipeline and the CLI subcommands.
inline constexpr std::uint64_t kStreamDataset = 0x6461;
inline constexpr std::uint64_t kStreamEval = 0x6576;
inline constexpr std::uint64_t kStreamGanSpace = 0x6773;
inline constexpr std::uint64_t kStreamSpectral = 0x6473;
inline constexpr std::uint64_t kStreamGan = 0x6761;

// BlobWorld for run seed s uses world seed generator.world_seed + s.
BlobWorld blob_world_for(const RunConfig& cfg, std::uint64_t seed);

DirectionSet discover_directions(const GeneratorNetwork& gen, Method method, const RunConfig& cfg,
                                 std::uint64_t seed);

struct CodeMetrics {
  double mig = 0.0;
  double modularity = 0.0;
  double unfairness = 0.0;
};

CodeMetrics evaluate_codes(const Tensor& codes, const LabelMatrix& factors, const RunConfig& cfg);

struct CellResult {
  Method method = Method::kClosedForm;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  CodeMetrics codes;     // encoder codes E(G(w))
  CodeMetrics ideal;     // projections w N
  double encoder_mse = 0.0;
  double target_variance = 0.0;
  std::uint64_t config_hash = 0;
  std::uint64_t generator_hash = 0;
  std::uint64_t directions_hash = 0;
  std::uint64_t dataset_hash = 0;
  std::uint64_t encoder_hash = 0;
  double wall_seconds = 0.0;
};

struct PipelineReport {
  std::vector<CellResult> cells;   // seeds outer, methods inner
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

// For each seed: builds the BlobWorld generator, one synthetic training set
// and one labelled evaluation set, then for each method discovers
// directions, distils an encoder and scores both code kinds. A failing cell
// is recorded with its message and the sweep continues. Writes
// <dir>/cells.csv, <dir>/summary.txt and, when output.artifacts is set,
// per-cell artifact files. Progress lines go to `log` when given.
PipelineReport run_pipeline(const RunConfig& cfg, std::ostream* log = nullptr);

// Column order is fixed; wall_time is always last.
std::string cells_csv(const std::vector<CellResult>& cells);
// Per method: mean and sample standard deviation over its successful cells.
std::string summary_text(const std::vector<CellResult>& cells, const RunConfig& cfg);

}  // namespace latdis

#endif  // LATDIS_PIPELINE_HPP_
