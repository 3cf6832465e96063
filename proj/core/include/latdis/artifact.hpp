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

#ifndef LATDIS_ARTIFACT_HPP_
#define LATDIS_ARTIFACT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "latdis/directions.hpp"
#include "latdis/distill.hpp"
#include "latdis/generator.hpp"
#include "latdis/network.hpp"
#include "latdis/tensor.hpp"

namespace latdis {

// File layout (all integers little-endian):
//
//   "PHD1"                      4 bytes
//   version                     u32
//   kind                        u8   (ArtifactKind)
//   tensor count                u32
//   per tensor:
//     name length               u16
//     name                      UTF-8 bytes
//     ndim                      u8
//     dims                      u32 x ndim
//     payload                   IEEE-754 binary64 x prod(dims)
//   CRC-32 (zlib polynomial)    u32 over every preceding byte
//
// Loading checks, in order: magic, checksum, version, structure.
inline constexpr std::uint32_t kArtifactVersion = 1;

enum class ArtifactKind : std::uint8_t {
  kNetwork = 0,
  kDirectionSet = 1,
  kDataset = 2,
  kReport = 3,
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Artifact {
  ArtifactKind kind = ArtifactKind::kReport;
  std::vector<NamedTensor> tensors;

  // Throws MalformedArtifactError when `name` is missing.
  const Tensor& get(std::string_view name) const;
  const Tensor* find(std::string_view name) const;
  void put(std::string name, Tensor value);
  friend bool operator==(const Artifact& a, const Artifact& b);
};

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ArtifactIoError : public ArtifactError {
 public:
  using ArtifactError::ArtifactError;
};
class BadMagicError : public ArtifactError {
 public:
  using ArtifactError::ArtifactError;
};
class ChecksumError : public ArtifactError {
 public:
  using ArtifactError::ArtifactError;
};
class VersionMismatchError : public ArtifactError {
 public:
  using ArtifactError::ArtifactError;
};
class MalformedArtifactError : public ArtifactError {
 public:
  using ArtifactError::ArtifactError;
};

std::vector<std::uint8_t> encode_artifact(const Artifact& a);
Artifact decode_artifact(std::span<const std::uint8_t> bytes);

void save_artifact(const std::filesystem::path& path, const Artifact& a);
Artifact load_artifact(const std::filesystem::path& path);

// Metadata helpers: strings as code-unit vectors, 64-bit integers as two
// exact 32-bit halves.
Tensor string_tensor(std::string_view s);
std::string tensor_string(const Tensor& t);
Tensor u64_tensor(std::uint64_t v);
std::uint64_t tensor_u64(const Tensor& t);

// Domain objects. Names inside the artifact are prefixed so several objects
// can share one file.
void put_network(Artifact& a, const std::string& prefix, const Network& net);
Network get_network(const Artifact& a, const std::string& prefix);

Artifact generator_artifact(const GeneratorNetwork& gen);
GeneratorNetwork generator_from_artifact(const Artifact& a);

Artifact encoder_artifact(const Encoder& enc);
Encoder encoder_from_artifact(const Artifact& a);

Artifact direction_artifact(const DirectionSet& dirs);
DirectionSet directions_from_artifact(const Artifact& a);

Artifact dataset_artifact(const SyntheticDataset& ds);
SyntheticDataset dataset_from_artifact(const Artifact& a);

}  // namespace latdis

#endif  // LATDIS_ARTIFACT_HPP_
