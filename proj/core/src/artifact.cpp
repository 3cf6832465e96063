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

#include "latdis/artifact.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

namespace latdis {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'P', 'H', 'D', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 1 + 4;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) {
      throw MalformedArtifactError("artifact ends " + std::to_string(n - remaining()) +
                                   " bytes early at offset " + std::to_string(pos_));
    }
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string layer_key(const std::string& prefix, std::size_t i, const char* what) {
  return prefix + ".L" + std::to_string(i) + "." + what;
}

double scalar(const Artifact& a, const std::string& name) {
  const Tensor& t = a.get(name);
  if (t.size() != 1) throw MalformedArtifactError("'" + name + "' must hold one value");
  return t[0];
}

std::size_t index_value(const Artifact& a, const std::string& name) {
  const double v = scalar(a, name);
  if (!(v >= 0.0 && v <= 4294967295.0) || v != std::floor(v)) {
    throw MalformedArtifactError("'" + name + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

Shape shape_from(const Tensor& t) {
  Shape s;
  for (double v : t.data()) {
    if (!(v >= 1.0) || v != std::floor(v)) throw MalformedArtifactError("invalid stored shape");
    s.push_back(static_cast<std::size_t>(v));
  }
  return s;
}

Tensor shape_tensor(const Shape& s) {
  std::vector<double> v(s.begin(), s.end());
  return Tensor::vector(std::span<const double>(v));
}

}  // namespace

const Tensor* Artifact::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.value;
  }
  return nullptr;
}

const Tensor& Artifact::get(std::string_view name) const {
  const Tensor* t = find(name);
  if (!t) throw MalformedArtifactError("artifact has no tensor named '" + std::string(name) + "'");
  return *t;
}

void Artifact::put(std::string name, Tensor value) {
  if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("artifact tensor name too long");
  }
  if (find(name)) throw std::invalid_argument("duplicate artifact tensor '" + name + "'");
  tensors.push_back({std::move(name), std::move(value)});
}

bool operator==(const Artifact& a, const Artifact& b) {
  if (a.kind != b.kind || a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    if (a.tensors[i].name != b.tensors[i].name || !(a.tensors[i].value == b.tensors[i].value)) return false;
  }
  return true;
}

std::vector<std::uint8_t> encode_artifact(const Artifact& a) {
  Writer w;
  w.bytes(kMagic);
  w.u32(kArtifactVersion);
  w.u8(static_cast<std::uint8_t>(a.kind));
  w.u32(static_cast<std::uint32_t>(a.tensors.size()));
  for (const auto& [name, t] : a.tensors) {
    if (t.ndim() == 0 || t.ndim() > 255) throw std::invalid_argument("artifact tensors need 1..255 dims");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(name.data()), name.size()));
    w.u8(static_cast<std::uint8_t>(t.ndim()));
    for (std::size_t d : t.shape()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("dimension too large");
      w.u32(static_cast<std::uint32_t>(d));
    }
    for (double v : t.data()) w.f64(v);
  }
  w.u32(crc_of(w.data()));
  return std::move(w.data());
}

Artifact decode_artifact(std::span<const std::uint8_t> bytes) {
  const std::size_t head = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(head), kMagic.begin())) {
    throw BadMagicError("not an artifact file (bad magic)");
  }
  if (bytes.size() < kHeaderBytes + 4) {
    throw ChecksumError("artifact truncated to " + std::to_string(bytes.size()) + " bytes");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  const std::uint32_t stored = tail.u32();
  const std::uint32_t actual = crc_of(body);
  if (stored != actual) throw ChecksumError("artifact checksum mismatch (file corrupt or truncated)");

  Reader r(body);
  r.take(kMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kArtifactVersion) {
    throw VersionMismatchError("artifact version " + std::to_string(version) + ", expected " +
                               std::to_string(kArtifactVersion));
  }
  Artifact a;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(ArtifactKind::kReport)) {
    throw MalformedArtifactError("unknown artifact kind " + std::to_string(kind));
  }
  a.kind = static_cast<ArtifactKind>(kind);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16();
    const auto name_bytes = r.take(len);
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::uint8_t ndim = r.u8();
    if (ndim == 0) throw MalformedArtifactError("tensor '" + name + "' has no dimensions");
    Shape shape;
    std::size_t elems = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const std::uint32_t dim = r.u32();
      if (dim == 0) throw MalformedArtifactError("tensor '" + name + "' has a zero dimension");
      if (elems > r.remaining() / dim) {
        throw MalformedArtifactError("tensor '" + name + "' declares more data than the file holds");
      }
      elems *= dim;
      shape.push_back(dim);
    }
    if (elems > r.remaining() / 8) {
      throw MalformedArtifactError("tensor '" + name + "' declares more data than the file holds");
    }
    std::vector<double> data(elems);
    for (double& v : data) v = r.f64();
    try {
      a.put(std::move(name), Tensor(std::move(shape), std::move(data)));
    } catch (const std::exception& e) {
      throw MalformedArtifactError(std::string("invalid tensor: ") + e.what());
    }
  }
  if (r.remaining() != 0) throw MalformedArtifactError("trailing bytes after the tensor table");
  return a;
}

void save_artifact(const std::filesystem::path& path, const Artifact& a) {
  const auto bytes = encode_artifact(a);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ArtifactIoError("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ArtifactIoError("write to '" + path.string() + "' failed");
}

Artifact load_artifact(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArtifactIoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw ArtifactIoError("read from '" + path.string() + "' failed");
  return decode_artifact(bytes);
}

Tensor string_tensor(std::string_view s) {
  std::vector<double> v{static_cast<double>(s.size())};
  for (char c : s) v.push_back(static_cast<double>(static_cast<unsigned char>(c)));
  return Tensor::vector(std::span<const double>(v));
}

std::string tensor_string(const Tensor& t) {
  if (t.ndim() != 1 || t.size() < 1 || t[0] != static_cast<double>(t.size() - 1)) {
    throw MalformedArtifactError("invalid stored string");
  }
  std::string s;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double c = t[i];
    if (!(c >= 0.0 && c <= 255.0) || c != std::floor(c)) throw MalformedArtifactError("invalid stored string");
    s.push_back(static_cast<char>(static_cast<unsigned char>(c)));
  }
  return s;
}

Tensor u64_tensor(std::uint64_t v) {
  return Tensor::vector({static_cast<double>(v >> 32), static_cast<double>(v & 0xffffffffULL)});
}

std::uint64_t tensor_u64(const Tensor& t) {
  if (t.size() != 2) throw MalformedArtifactError("invalid stored 64-bit value");
  for (double h : t.data()) {
    if (!(h >= 0.0 && h <= 4294967295.0) || h != std::floor(h)) {
      throw MalformedArtifactError("invalid stored 64-bit value");
    }
  }
  return (static_cast<std::uint64_t>(t[0]) << 32) | static_cast<std::uint64_t>(t[1]);
}

void put_network(Artifact& a, const std::string& prefix, const Network& net) {
  a.put(prefix + ".input", shape_tensor(net.input_shape()));
  a.put(prefix + ".depth", Tensor::vector({static_cast<double>(net.depth())}));
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const Layer& l = net.layer(i);
    a.put(layer_key(prefix, i, "kind"), Tensor::vector({static_cast<double>(l.kind())}));
    std::vector<double> cfg{static_cast<double>(l.config().size())};
    for (double v : l.config()) cfg.push_back(v);
    a.put(layer_key(prefix, i, "config"), Tensor::vector(std::span<const double>(cfg)));
    const auto params = l.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      a.put(layer_key(prefix, i, ("p" + std::to_string(p)).c_str()), params[p]);
    }
  }
}

Network get_network(const Artifact& a, const std::string& prefix) {
  try {
    Network net(shape_from(a.get(prefix + ".input")));
    const std::size_t depth = index_value(a, prefix + ".depth");
    for (std::size_t i = 0; i < depth; ++i) {
      const std::size_t kind = index_value(a, layer_key(prefix, i, "kind"));
      if (kind > static_cast<std::size_t>(LayerKind::kBlobRender)) {
        throw MalformedArtifactError("unknown layer kind " + std::to_string(kind));
      }
      const Tensor& cfg = a.get(layer_key(prefix, i, "config"));
      if (cfg[0] != static_cast<double>(cfg.size() - 1)) throw MalformedArtifactError("invalid layer config");
      std::vector<Tensor> params;
      while (const Tensor* p = a.find(layer_key(prefix, i, ("p" + std::to_string(params.size())).c_str()))) {
        params.push_back(*p);
      }
      net.append(make_layer(static_cast<LayerKind>(kind), cfg.data().subspan(1), std::move(params)));
    }
    return net;
  } catch (const ArtifactError&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedArtifactError("network '" + prefix + "': " + e.what());
  }
}

Artifact generator_artifact(const GeneratorNetwork& gen) {
  Artifact a;
  a.kind = ArtifactKind::kNetwork;
  a.put("object", string_tensor("generator"));
  put_network(a, "synthesis", gen.synthesis());
  if (gen.style_net()) put_network(a, "style", *gen.style_net());
  a.put("truncation", Tensor::vector({gen.truncation()}));
  a.put("mean_latent", gen.mean_latent());
  return a;
}

GeneratorNetwork generator_from_artifact(const Artifact& a) {
  if (a.kind != ArtifactKind::kNetwork || tensor_string(a.get("object")) != "generator") {
    throw MalformedArtifactError("artifact does not hold a generator");
  }
  std::optional<Network> style;
  if (a.find("style.input")) style = get_network(a, "style");
  try {
    return GeneratorNetwork(std::move(style), get_network(a, "synthesis"), scalar(a, "truncation"),
                            a.get("mean_latent"));
  } catch (const ArtifactError&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedArtifactError(std::string("generator: ") + e.what());
  }
}

Artifact encoder_artifact(const Encoder& enc) {
  Artifact a;
  a.kind = ArtifactKind::kNetwork;
  a.put("object", string_tensor("encoder"));
  a.put("arch", string_tensor(enc.arch));
  put_network(a, "encoder", enc.net);
  return a;
}

Encoder encoder_from_artifact(const Artifact& a) {
  if (a.kind != ArtifactKind::kNetwork || tensor_string(a.get("object")) != "encoder") {
    throw MalformedArtifactError("artifact does not hold an encoder");
  }
  return Encoder{get_network(a, "encoder"), tensor_string(a.get("arch"))};
}

Artifact direction_artifact(const DirectionSet& dirs) {
  Artifact a;
  a.kind = ArtifactKind::kDirectionSet;
  a.put("directions", dirs.directions);
  a.put("method", Tensor::vector({static_cast<double>(dirs.method)}));
  a.put("tap", Tensor::vector({dirs.tap ? static_cast<double>(*dirs.tap) : -1.0}));
  a.put("seed", u64_tensor(dirs.seed));
  a.put("base_hash", u64_tensor(dirs.base_hash));
  if (!dirs.values.empty()) a.put("values", Tensor::vector(std::span<const double>(dirs.values)));
  if (!dirs.degenerate.empty()) {
    Tensor blocks({dirs.degenerate.size(), 2});
    for (std::size_t i = 0; i < dirs.degenerate.size(); ++i) {
      blocks.at(i, 0) = static_cast<double>(dirs.degenerate[i].begin);
      blocks.at(i, 1) = static_cast<double>(dirs.degenerate[i].size);
    }
    a.put("degenerate", std::move(blocks));
  }
  return a;
}

DirectionSet directions_from_artifact(const Artifact& a) {
  if (a.kind != ArtifactKind::kDirectionSet) throw MalformedArtifactError("artifact does not hold directions");
  DirectionSet d;
  d.directions = a.get("directions");
  const std::size_t method = index_value(a, "method");
  if (method > static_cast<std::size_t>(Method::kLatentDiscovery)) throw MalformedArtifactError("unknown method tag");
  d.method = static_cast<Method>(method);
  const double tap = scalar(a, "tap");
  if (tap >= 0.0) d.tap = index_value(a, "tap");
  d.seed = tensor_u64(a.get("seed"));
  d.base_hash = tensor_u64(a.get("base_hash"));
  if (const Tensor* v = a.find("values")) d.values.assign(v->data().begin(), v->data().end());
  if (const Tensor* b = a.find("degenerate")) {
    if (b->ndim() != 2 || b->dim(1) != 2) throw MalformedArtifactError("invalid degenerate-block table");
    for (std::size_t i = 0; i < b->dim(0); ++i) {
      d.degenerate.push_back({static_cast<std::size_t>(b->at(i, 0)), static_cast<std::size_t>(b->at(i, 1))});
    }
  }
  if (d.directions.ndim() != 2) throw MalformedArtifactError("direction matrix must be 2-D");
  try {
    d.validate();
  } catch (const std::exception& e) {
    throw MalformedArtifactError(e.what());
  }
  return d;
}

Artifact dataset_artifact(const SyntheticDataset& ds) {
  Artifact a;
  a.kind = ArtifactKind::kDataset;
  a.put("latents", *ds.latents);
  a.put("images", *ds.images);
  a.put("targets", ds.targets);
  a.put("generator_hash", u64_tensor(ds.provenance.generator_hash));
  a.put("directions_hash", u64_tensor(ds.provenance.directions_hash));
  a.put("truncation", Tensor::vector({ds.provenance.truncation}));
  a.put("seed", u64_tensor(ds.provenance.seed));
  a.put("stream", u64_tensor(ds.provenance.stream));
  return a;
}

SyntheticDataset dataset_from_artifact(const Artifact& a) {
  if (a.kind != ArtifactKind::kDataset) throw MalformedArtifactError("artifact does not hold a dataset");
  SyntheticDataset ds;
  ds.latents = std::make_shared<const Tensor>(a.get("latents"));
  ds.images = std::make_shared<const Tensor>(a.get("images"));
  ds.targets = a.get("targets");
  const std::size_t n = ds.latents->dim(0);
  if (ds.latents->ndim() != 2 || ds.images->dim(0) != n || ds.targets.ndim() != 2 || ds.targets.dim(0) != n) {
    throw MalformedArtifactError("dataset fields disagree on the sample count");
  }
  ds.provenance.generator_hash = tensor_u64(a.get("generator_hash"));
  ds.provenance.directions_hash = tensor_u64(a.get("directions_hash"));
  ds.provenance.truncation = scalar(a, "truncation");
  ds.provenance.seed = tensor_u64(a.get("seed"));
  ds.provenance.stream = tensor_u64(a.get("stream"));
  return ds;
}

}  // namespace latdis
