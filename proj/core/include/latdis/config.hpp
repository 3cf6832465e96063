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

#ifndef LATDIS_CONFIG_HPP_
#define LATDIS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "latdis/blob_world.hpp"
#include "latdis/directions.hpp"
#include "latdis/distill.hpp"
#include "latdis/gan.hpp"
#include "latdis/metrics.hpp"
#include "latdis/power_svd.hpp"

namespace latdis {

// Carries the 1-based line of the offending input, or 0 for errors found by
// validate() or set_config_value().
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RunConfig {
  struct GeneratorSection {
    std::string kind = "blob";            // blob | gan
    BlobWorldConfig blob;                 // blob.seed is the world seed offset
    double truncation = 0.8;
    GanConfig gan;
    std::size_t gan_train_samples = 10000;
  } generator;

  struct DiscoverSection {
    std::vector<Method> methods{Method::kClosedForm, Method::kGanSpace, Method::kDeepSpectral,
                                Method::kLatentDiscovery};
    std::size_t k = 5;
    std::size_t gs_samples = kGanSpaceSamples;
    std::size_t ds_tap = kImageTap;
    PowerSvdOptions ds;
    LdConfig ld;                          // ld.k and ld.seed are set per run
  } discover;

  struct EncoderSection {
    std::string arch = "compact";
    std::size_t samples = kDefaultSyntheticSamples;
    EncoderHyper hyper;                   // hyper.seed is set per run
  } encoder;

  struct MetricsSection {
    std::size_t samples = kMetricSamples;
    std::size_t bins = kDefaultBins;
    ClassifierConfig classifier;
  } metrics;

  struct OutputSection {
    std::string dir = "latdis-out";
    std::vector<std::uint64_t> seeds{0, 1, 2};
    bool artifacts = true;
  } output;

  // Throws ConfigError naming the key.
  void validate() const;
};

// Line-oriented "key = value" text with [section] headers. '#' and ';' start
// comments. Unknown sections or keys, duplicates and malformed values raise
// ConfigError with the line number. Keys left out keep their defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Every key in a fixed order with shortest round-trip number formatting;
// parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& cfg);
// FNV-1a 64 of serialize_config(cfg) with output.dir blanked.
std::uint64_t config_hash(const RunConfig& cfg);

// Assigns "section.key" from its text form, as a config line would.
void set_config_value(RunConfig& cfg, std::string_view dotted_key, std::string_view value);

// "section.key" names in serialization order.
std::vector<std::string> config_keys();

}  // namespace latdis

#endif  // LATDIS_CONFIG_HPP_
