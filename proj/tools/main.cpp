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

// latdis command-line tool. Exit codes: 0 success, 1 config or usage error,
// 2 runtime error. Results go to stdout as key=value lines.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "latdis/artifact.hpp"
#include "latdis/blob_world.hpp"
#include "latdis/config.hpp"
#include "latdis/directions.hpp"
#include "latdis/distill.hpp"
#include "latdis/gan.hpp"
#include "latdis/pipeline.hpp"
#include "latdis/traversal.hpp"

namespace fs = std::filesystem;
using namespace latdis;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_config(g.config);
  for (const std::string& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(0, "--set expects section.key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.output.seeds = {*g.seed};
  if (!g.out.empty()) cfg.output.dir = g.out;
  cfg.validate();
  return cfg;
}

std::uint64_t run_seed(const RunConfig& cfg) { return cfg.output.seeds.front(); }

fs::path out_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.output.dir);
  return cfg.output.dir;
}

GeneratorNetwork load_or_build_generator(const std::string& path, const RunConfig& cfg) {
  if (!path.empty()) return generator_from_artifact(load_artifact(path));
  return make_entangled_generator(blob_world_for(cfg, run_seed(cfg)), cfg.generator.truncation);
}

void print(const char* key, double v) { std::printf("%s=%.17g\n", key, v); }
void print(const char* key, const std::string& v) { std::printf("%s=%s\n", key, v.c_str()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latdis: latent direction discovery and encoder distillation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Run seed (replaces output.seeds)");
  app.add_option("--out", g.out, "Output directory (replaces output.dir)");
  app.add_option("--set", g.overrides, "Override one key: section.key=value");

  auto* synth = app.add_subcommand("synth", "Render a BlobWorld dataset");
  std::size_t synth_samples = 0;
  synth->add_option("--samples", synth_samples, "Sample count (default encoder.samples)");

  auto* gan = app.add_subcommand("train-gan", "Train a small GAN on BlobWorld images");

  auto* discover = app.add_subcommand("discover", "Find latent directions");
  std::string method = "cf", gen_path;
  discover->add_option("--method", method, "cf | gs | ds | ld")->required();
  discover->add_option("--generator", gen_path, "Generator artifact (default: BlobWorld)");

  auto* distill = app.add_subcommand("distill", "Train an encoder onto directions");
  std::string dirs_path;
  distill->add_option("--directions", dirs_path, "Direction artifact")->required();
  distill->add_option("--generator", gen_path, "Generator artifact (default: BlobWorld)");

  auto* eval = app.add_subcommand("eval", "Score an encoder against BlobWorld factors");
  std::string enc_path;
  eval->add_option("--encoder", enc_path, "Encoder artifact")->required();
  eval->add_option("--directions", dirs_path, "Direction artifact; adds ideal-projection scores");

  auto* traverse = app.add_subcommand("traverse", "Write a latent traversal grid");
  std::size_t index = 0, rows = 3, steps = 7;
  double alpha_max = 3.0;
  traverse->add_option("--directions", dirs_path, "Direction artifact")->required();
  traverse->add_option("--generator", gen_path, "Generator artifact (default: BlobWorld)");
  traverse->add_option("--index", index, "Direction index");
  traverse->add_option("--rows", rows, "Base latents (grid rows)")->check(CLI::PositiveNumber);
  traverse->add_option("--steps", steps, "Alpha values per row")->check(CLI::PositiveNumber);
  traverse->add_option("--alpha", alpha_max, "Alphas span [-alpha, alpha]");

  auto* sweep = app.add_subcommand("sweep", "Run every method for every seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig cfg;
  try {
    cfg = resolve(g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    const std::uint64_t seed = run_seed(cfg);
    if (*synth) {
      const BlobWorld world = blob_world_for(cfg, seed);
      const GeneratorNetwork gen_net = make_entangled_generator(world, cfg.generator.truncation);
      DirectionSet truth;
      truth.directions = ground_truth_directions(world);
      Rng rng(seed, kStreamDataset);
      const SyntheticDataset ds = build_synthetic_dataset(gen_net, truth, synth_samples ? synth_samples : cfg.encoder.samples,
                                                          cfg.generator.truncation, rng);
      const fs::path dir = out_dir(cfg);
      save_artifact(dir / "generator.latdis", generator_artifact(gen_net));
      save_artifact(dir / "truth.latdis", direction_artifact(truth));
      save_artifact(dir / "dataset.latdis", dataset_artifact(ds));
      print("generator", (dir / "generator.latdis").string());
      print("directions", (dir / "truth.latdis").string());
      print("dataset", (dir / "dataset.latdis").string());
      print("samples", static_cast<double>(ds.size()));
    } else if (*gan) {
      const BlobWorld world = blob_world_for(cfg, seed);
      const GeneratorNetwork blob = make_entangled_generator(world, cfg.generator.truncation);
      Rng data_rng(seed, kStreamDataset);
      const Tensor images =
          blob.synthesize(sample_latents(blob, cfg.generator.gan_train_samples, data_rng, cfg.generator.truncation));
      Rng rng(seed, kStreamGan);
      const GanResult result = train_gan(images, cfg.generator.gan, rng);
      const fs::path dir = out_dir(cfg);
      save_artifact(dir / "gan.latdis", generator_artifact(result.generator));
      print("generator", (dir / "gan.latdis").string());
      print("d_loss", result.d_loss.back());
      print("g_loss", result.g_loss.back());
    } else if (*discover) {
      Method m;
      try {
        m = parse_method(method);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(0, e.what());
      }
      const GeneratorNetwork gen_net = load_or_build_generator(gen_path, cfg);
      const DirectionSet dirs = discover_directions(gen_net, m, cfg, seed);
      const fs::path file = out_dir(cfg) / ("directions-" + std::string(method_name(m)) + ".latdis");
      save_artifact(file, direction_artifact(dirs));
      print("directions", file.string());
      for (std::size_t i = 0; i < dirs.values.size(); ++i) {
        print(("value" + std::to_string(i)).c_str(), dirs.values[i]);
      }
    } else if (*distill) {
      const GeneratorNetwork gen_net = load_or_build_generator(gen_path, cfg);
      const DirectionSet dirs = directions_from_artifact(load_artifact(dirs_path));
      Rng rng(seed, kStreamDataset);
      const SyntheticDataset ds =
          build_synthetic_dataset(gen_net, dirs, cfg.encoder.samples, cfg.generator.truncation, rng);
      EncoderHyper hyper = cfg.encoder.hyper;
      hyper.seed = seed;
      auto [enc, report] = train_encoder(ds, cfg.encoder.arch, hyper);
      const fs::path file = out_dir(cfg) / "encoder.latdis";
      save_artifact(file, encoder_artifact(enc));
      print("encoder", file.string());
      print("heldout_mse", report.heldout_mse);
      print("target_variance", report.heldout_target_variance);
      print("wall_seconds", report.wall_seconds);
    } else if (*eval) {
      const BlobWorld world = blob_world_for(cfg, seed);
      const GeneratorNetwork gen_net = make_entangled_generator(world, cfg.generator.truncation);
      const Encoder enc = encoder_from_artifact(load_artifact(enc_path));
      Rng rng(seed, kStreamEval);
      const LabeledDataset data =
          make_labeled_dataset(gen_net, world.spec, cfg.metrics.samples, cfg.generator.truncation, rng);
      const CodeMetrics m = evaluate_codes(encode(enc, data.images), data.levels, cfg);
      print("mig", m.mig);
      print("modularity", m.modularity);
      print("unfairness", m.unfairness);
      if (!dirs_path.empty()) {
        const DirectionSet dirs = directions_from_artifact(load_artifact(dirs_path));
        const CodeMetrics ideal = evaluate_codes(project_codes(data.latents, dirs), data.levels, cfg);
        print("mig_ideal", ideal.mig);
        print("modularity_ideal", ideal.modularity);
        print("unfairness_ideal", ideal.unfairness);
      }
    } else if (*traverse) {
      const GeneratorNetwork gen_net = load_or_build_generator(gen_path, cfg);
      const DirectionSet dirs = directions_from_artifact(load_artifact(dirs_path));
      TraversalSpec spec;
      spec.direction = index;
      spec.alphas = alpha_grid(steps, -alpha_max, alpha_max);
      Rng rng(seed, kStreamEval);
      spec.base_latents = sample_latents(gen_net, rows, rng, cfg.generator.truncation);
      const ImageGrid grid = traversal_grid(gen_net, dirs, spec);
      const fs::path file =
          out_dir(cfg) / ("traversal-" + std::to_string(index) + (grid.channels == 3 ? ".ppm" : ".pgm"));
      write_pnm(file, grid);
      print("image", file.string());
      print("width", static_cast<double>(grid.width));
      print("height", static_cast<double>(grid.height));
    } else if (*sweep) {
      const PipelineReport report = run_pipeline(cfg, &std::cerr);
      std::size_t failed = 0;
      for (const CellResult& c : report.cells) failed += c.ok ? 0 : 1;
      print("csv", report.csv_path.string());
      print("summary", report.summary_path.string());
      print("failed_cells", static_cast<double>(failed));
      return failed ? 2 : 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
