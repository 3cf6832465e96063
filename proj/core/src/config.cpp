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

#include "latdis/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace latdis {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Parsers throw std::invalid_argument; the caller adds the line and key.
double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_size(std::string_view s) { return static_cast<std::size_t>(parse_u64(s)); }

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += f(xs[i]);
  }
  return s;
}

struct Key {
  const char* section;
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define LATDIS_NUM(sec, key, field, parse)                                              \
  Key{sec, key, [](const RunConfig& c) { return fmt(c.field); },                        \
      [](RunConfig& c, std::string_view v) { c.field = parse(v); }}
#define LATDIS_SIZE(sec, key, field)                                                    \
  Key{sec, key, [](const RunConfig& c) { return fmt(static_cast<std::uint64_t>(c.field)); }, \
      [](RunConfig& c, std::string_view v) { c.field = parse_size(v); }}
#define LATDIS_STR(sec, key, field)                                                     \
  Key{sec, key, [](const RunConfig& c) { return c.field; },                             \
      [](RunConfig& c, std::string_view v) { c.field = std::string(v); }}
#define LATDIS_DLIST(sec, key, field)                                                   \
  Key{sec, key, [](const RunConfig& c) { return join(c.field, [](double x) { return fmt(x); }); }, \
      [](RunConfig& c, std::string_view v) {                                            \
        c.field.clear();                                                                \
        for (auto item : split_list(v)) c.field.push_back(parse_double(item));          \
      }}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys{
      LATDIS_STR("generator", "kind", generator.kind),
      LATDIS_SIZE("generator", "latent_dim", generator.blob.latent_dim),
      LATDIS_SIZE("generator", "image_size", generator.blob.image_size),
      LATDIS_DLIST("generator", "singular_values", generator.blob.singular_values),
      LATDIS_DLIST("generator", "factor_spread", generator.blob.factor_spread),
      LATDIS_NUM("generator", "null_spread", generator.blob.null_spread, parse_double),
      LATDIS_DLIST("generator", "factor_sharpness", generator.blob.factor_sharpness),
      LATDIS_NUM("generator", "reference_truncation", generator.blob.reference_truncation, parse_double),
      LATDIS_NUM("generator", "identity_mixing", generator.blob.identity_mixing, parse_bool),
      LATDIS_SIZE("generator", "levels", generator.blob.levels),
      LATDIS_NUM("generator", "world_seed", generator.blob.seed, parse_u64),
      LATDIS_NUM("generator", "truncation", generator.truncation, parse_double),
      LATDIS_SIZE("generator", "gan_latent_dim", generator.gan.generator.latent_dim),
      LATDIS_SIZE("generator", "gan_base_channels", generator.gan.generator.base_channels),
      LATDIS_NUM("generator", "gan_upsample", generator.gan.generator.use_upsample, parse_bool),
      LATDIS_NUM("generator", "gan_style", generator.gan.style, parse_bool),
      LATDIS_SIZE("generator", "gan_n_mlp", generator.gan.n_mlp),
      LATDIS_SIZE("generator", "gan_disc_channels", generator.gan.disc_channels),
      LATDIS_SIZE("generator", "gan_iterations", generator.gan.iterations),
      LATDIS_SIZE("generator", "gan_batch_size", generator.gan.batch_size),
      LATDIS_NUM("generator", "gan_lr", generator.gan.lr, parse_double),
      LATDIS_NUM("generator", "gan_beta1", generator.gan.beta1, parse_double),
      LATDIS_NUM("generator", "gan_beta2", generator.gan.beta2, parse_double),
      LATDIS_NUM("generator", "gan_r1", generator.gan.r1, parse_double),
      LATDIS_SIZE("generator", "gan_d_reg_every", generator.gan.d_reg_every),
      LATDIS_NUM("generator", "gan_truncation", generator.gan.truncation, parse_double),
      LATDIS_SIZE("generator", "gan_train_samples", generator.gan_train_samples),

      Key{"discover", "methods",
          [](const RunConfig& c) {
            return join(c.discover.methods, [](Method m) { return std::string(method_name(m)); });
          },
          [](RunConfig& c, std::string_view v) {
            c.discover.methods.clear();
            for (auto item : split_list(v)) c.discover.methods.push_back(parse_method(item));
          }},
      LATDIS_SIZE("discover", "k", discover.k),
      LATDIS_SIZE("discover", "gs_samples", discover.gs_samples),
      LATDIS_SIZE("discover", "ds_tap", discover.ds_tap),
      LATDIS_NUM("discover", "ds_tol", discover.ds.tol, parse_double),
      LATDIS_SIZE("discover", "ds_max_iter", discover.ds.max_iter),
      LATDIS_SIZE("discover", "ds_oversample", discover.ds.oversample),
      LATDIS_NUM("discover", "ld_lambda", discover.ld.lambda, parse_double),
      LATDIS_NUM("discover", "ld_shift_min", discover.ld.shift_min, parse_double),
      LATDIS_NUM("discover", "ld_shift_max", discover.ld.shift_max, parse_double),
      LATDIS_SIZE("discover", "ld_iterations", discover.ld.iterations),
      LATDIS_SIZE("discover", "ld_batch_size", discover.ld.batch_size),
      LATDIS_NUM("discover", "ld_lr", discover.ld.lr, parse_double),
      LATDIS_NUM("discover", "ld_direction_lr", discover.ld.direction_lr, parse_double),
      LATDIS_STR("discover", "ld_reconstructor", discover.ld.reconstructor),
      LATDIS_SIZE("discover", "ld_heldout_pairs", discover.ld.heldout_pairs),

      LATDIS_STR("encoder", "arch", encoder.arch),
      LATDIS_SIZE("encoder", "samples", encoder.samples),
      LATDIS_SIZE("encoder", "batch_size", encoder.hyper.batch_size),
      LATDIS_NUM("encoder", "lr", encoder.hyper.lr, parse_double),
      LATDIS_SIZE("encoder", "epochs", encoder.hyper.epochs),
      LATDIS_SIZE("encoder", "decay_every", encoder.hyper.decay_every),
      LATDIS_NUM("encoder", "gamma", encoder.hyper.gamma, parse_double),
      LATDIS_NUM("encoder", "holdout_fraction", encoder.hyper.holdout_fraction, parse_double),

      LATDIS_SIZE("metrics", "samples", metrics.samples),
      LATDIS_SIZE("metrics", "bins", metrics.bins),
      LATDIS_SIZE("metrics", "classifier_steps", metrics.classifier.steps),
      LATDIS_NUM("metrics", "classifier_lr", metrics.classifier.lr, parse_double),
      LATDIS_NUM("metrics", "classifier_holdout", metrics.classifier.holdout_fraction, parse_double),

      LATDIS_STR("output", "dir", output.dir),
      Key{"output", "seeds",
          [](const RunConfig& c) { return join(c.output.seeds, [](std::uint64_t s) { return fmt(s); }); },
          [](RunConfig& c, std::string_view v) {
            c.output.seeds.clear();
            for (auto item : split_list(v)) c.output.seeds.push_back(parse_u64(item));
          }},
      LATDIS_NUM("output", "artifacts", output.artifacts, parse_bool),
  };
  return keys;
}

#undef LATDIS_NUM
#undef LATDIS_SIZE
#undef LATDIS_STR
#undef LATDIS_DLIST

const Key* find_key(std::string_view section, std::string_view name) {
  for (const Key& k : key_table()) {
    if (section == k.section && name == k.name) return &k;
  }
  return nullptr;
}

bool known_section(std::string_view s) {
  return s == "generator" || s == "discover" || s == "encoder" || s == "metrics" || s == "output";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(0, what);
}

}  // namespace

ConfigError::ConfigError(std::size_t line, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

void RunConfig::validate() const {
  const auto& b = generator.blob;
  require(generator.kind == "blob" || generator.kind == "gan", "generator.kind must be blob or gan");
  require(b.singular_values.size() == 5, "generator.singular_values needs one value per blob factor (5)");
  require(b.factor_spread.size() == 5, "generator.factor_spread needs 5 values");
  require(b.factor_sharpness.size() == 5, "generator.factor_sharpness needs 5 values");
  require(b.latent_dim >= 5, "generator.latent_dim must be >= 5");
  require(b.image_size >= 8 && b.image_size % 4 == 0, "generator.image_size must be a multiple of 4, >= 8");
  require(b.levels >= 2, "generator.levels must be >= 2");
  require(generator.truncation > 0.0 && generator.truncation <= 1.0, "generator.truncation must lie in (0, 1]");
  try {
    generator.gan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string("generator.") + e.what());
  }
  require(generator.gan_train_samples >= 1, "generator.gan_train_samples must be >= 1");

  require(!discover.methods.empty(), "discover.methods must name at least one method");
  require(discover.k >= 2, "discover.k must be >= 2");
  require(discover.gs_samples > discover.k, "discover.gs_samples must exceed discover.k");
  require(discover.ds_tap >= 1, "discover.ds_tap must be >= 1");
  require(discover.ds.tol > 0.0, "discover.ds_tol must be positive");
  require(discover.ds.max_iter >= 1, "discover.ds_max_iter must be >= 1");
  try {
    LdConfig ld = discover.ld;
    ld.k = discover.k;
    ld.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string("discover.") + e.what());
  }

  require(encoder.arch == "desk32" || encoder.arch == "full64" || encoder.arch == "compact",
          "encoder.arch must be desk32, full64 or compact");
  require(encoder.samples >= 20, "encoder.samples must be >= 20");
  try {
    encoder.hyper.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string("encoder.") + e.what());
  }

  require(metrics.samples >= 20, "metrics.samples must be >= 20");
  require(metrics.bins >= 2, "metrics.bins must be >= 2");
  require(metrics.classifier.steps >= 1, "metrics.classifier_steps must be >= 1");
  require(metrics.classifier.lr > 0.0, "metrics.classifier_lr must be positive");
  require(metrics.classifier.holdout_fraction > 0.0 && metrics.classifier.holdout_fraction < 1.0,
          "metrics.classifier_holdout must lie in (0, 1)");

  require(!output.dir.empty(), "output.dir must not be empty");
  require(!output.seeds.empty(), "output.seeds must list at least one seed");
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string_view::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key = value");
    const std::string_view name = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(line_no, "key '" + std::string(name) + "' outside any section");
    const Key* key = find_key(section, name);
    if (!key) throw ConfigError(line_no, "unknown key '" + std::string(name) + "' in [" + section + "]");
    if (!seen.insert(section + "." + std::string(name)).second) {
      throw ConfigError(line_no, "duplicate key '" + std::string(name) + "' in [" + section + "]");
    }
    try {
      key->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, section + "." + std::string(name) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  std::string_view section;
  for (const Key& k : key_table()) {
    if (section != k.section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + std::string(section) + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  RunConfig rest = cfg;
  rest.output.dir.clear();  // where results land does not change them
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(rest)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void set_config_value(RunConfig& cfg, std::string_view dotted_key, std::string_view value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string_view::npos) throw ConfigError(0, "expected section.key, got '" + std::string(dotted_key) + "'");
  const Key* key = find_key(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (!key) throw ConfigError(0, "unknown key '" + std::string(dotted_key) + "'");
  try {
    key->set(cfg, trim(value));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string(dotted_key) + ": " + e.what());
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : key_table()) out.push_back(std::string(k.section) + "." + k.name);
  return out;
}

}  // namespace latdis
