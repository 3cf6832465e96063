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

#include "latdis/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "latdis/artifact.hpp"
#include "latdis/distill.hpp"
#include "latdis/metrics.hpp"

namespace latdis {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string hex(std::uint64_t v) {
  char buf[17];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, 16);
  return std::string(16 - static_cast<std::size_t>(r.ptr - buf), '0') + std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw ArtifactIoError("cannot open '" + p.string() + "' for writing");
  f << text;
  if (!f) throw ArtifactIoError("write to '" + p.string() + "' failed");
}

CellResult failed_cell(CellResult c, const std::string& what) {
  const double nan = std::nan("");
  c.ok = false;
  c.error = what;
  c.codes = {nan, nan, nan};
  c.ideal = {nan, nan, nan};
  c.encoder_mse = nan;
  c.target_variance = nan;
  return c;
}

}  // namespace

BlobWorld blob_world_for(const RunConfig& cfg, std::uint64_t seed) {
  BlobWorldConfig b = cfg.generator.blob;
  b.seed = cfg.generator.blob.seed + seed;
  return make_blob_world(b);
}

DirectionSet discover_directions(const GeneratorNetwork& gen, Method method, const RunConfig& cfg,
                                 std::uint64_t seed) {
  const std::size_t k = cfg.discover.k;
  switch (method) {
    case Method::kClosedForm:
      return closed_form(gen, k);
    case Method::kGanSpace: {
      Rng rng(seed, kStreamGanSpace);
      return ganspace(gen, k, rng, cfg.discover.gs_samples);
    }
    case Method::kDeepSpectral: {
      Rng rng(seed, kStreamSpectral);
      return deep_spectral(gen, cfg.discover.ds_tap, k, rng, {}, cfg.discover.ds);
    }
    case Method::kLatentDiscovery: {
      LdConfig ld = cfg.discover.ld;
      ld.k = k;
      ld.seed = seed;
      return latent_discovery(gen, ld).directions;
    }
  }
  throw std::invalid_argument("unknown method");
}

CodeMetrics evaluate_codes(const Tensor& codes, const LabelMatrix& factors, const RunConfig& cfg) {
  const MutualInfoMatrix mi = mutual_info_matrix(discretize(codes, cfg.metrics.bins), factors);
  CodeMetrics m;
  m.mig = mig(mi);
  m.modularity = modularity(mi);
  m.unfairness = unfairness_sweep(codes, factors, cfg.metrics.classifier).average;
  return m;
}

PipelineReport run_pipeline(const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (cfg.generator.kind != "blob") {
    throw ConfigError(0, "the sweep scores against ground-truth factors and needs generator.kind = blob");
  }
  using clock = std::chrono::steady_clock;
  const std::filesystem::path dir = cfg.output.dir;
  std::filesystem::create_directories(dir);
  const std::uint64_t chash = config_hash(cfg);
  write_text(dir / "config.ini", serialize_config(cfg));

  PipelineReport report;
  for (const std::uint64_t seed : cfg.output.seeds) {
    const BlobWorld world = blob_world_for(cfg, seed);
    const GeneratorNetwork gen = make_entangled_generator(world, cfg.generator.truncation);
    const std::filesystem::path seed_dir = dir / ("seed" + std::to_string(seed));
    if (cfg.output.artifacts) {
      std::filesystem::create_directories(seed_dir);
      save_artifact(seed_dir / "generator.latdis", generator_artifact(gen));
    }
    DirectionSet truth;
    truth.directions = ground_truth_directions(world);
    Rng data_rng(seed, kStreamDataset);
    const SyntheticDataset base =
        build_synthetic_dataset(gen, truth, cfg.encoder.samples, cfg.generator.truncation, data_rng);
    Rng eval_rng(seed, kStreamEval);
    const LabeledDataset eval =
        make_labeled_dataset(gen, world.spec, cfg.metrics.samples, cfg.generator.truncation, eval_rng);
    if (log) *log << "seed " << seed << ": generator " << hex(gen.hash()) << ", " << base.size() << " samples\n";

    for (const Method method : cfg.discover.methods) {
      const auto t0 = clock::now();
      CellResult cell;
      cell.method = method;
      cell.seed = seed;
      cell.config_hash = chash;
      cell.generator_hash = gen.hash();
      try {
        const DirectionSet dirs = discover_directions(gen, method, cfg, seed);
        cell.directions_hash = dirs.hash();
        const SyntheticDataset ds = retarget(base, dirs);
        cell.dataset_hash = ds.hash();
        EncoderHyper hyper = cfg.encoder.hyper;
        hyper.seed = seed;
        auto [enc, train] = train_encoder(ds, cfg.encoder.arch, hyper);
        cell.encoder_hash = train.param_hash;
        cell.encoder_mse = train.heldout_mse;
        cell.target_variance = train.heldout_target_variance;
        cell.codes = evaluate_codes(encode(enc, eval.images), eval.levels, cfg);
        cell.ideal = evaluate_codes(project_codes(eval.latents, dirs), eval.levels, cfg);
        if (cfg.output.artifacts) {
          const auto cell_dir = seed_dir / std::string(method_name(method));
          std::filesystem::create_directories(cell_dir);
          save_artifact(cell_dir / "directions.latdis", direction_artifact(dirs));
          save_artifact(cell_dir / "encoder.latdis", encoder_artifact(enc));
        }
        cell.ok = true;
      } catch (const std::exception& e) {
        cell = failed_cell(cell, e.what());
      }
      cell.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
      if (log) {
        *log << "  " << method_name(method) << ": ";
        if (cell.ok) {
          *log << "MIG " << cell.codes.mig << " (ideal " << cell.ideal.mig << "), mse " << cell.encoder_mse;
        } else {
          *log << "failed: " << cell.error;
        }
        *log << ", " << cell.wall_seconds << " s\n";
      }
      report.cells.push_back(std::move(cell));
    }
  }
  report.csv_path = dir / "cells.csv";
  report.summary_path = dir / "summary.txt";
  write_text(report.csv_path, cells_csv(report.cells));
  write_text(report.summary_path, summary_text(report.cells, cfg));
  return report;
}

std::string cells_csv(const std::vector<CellResult>& cells) {
  std::string out =
      "method,seed,status,mig,mig_ideal,modularity,modularity_ideal,unfairness,unfairness_ideal,"
      "encoder_mse,target_variance,config_hash,generator_hash,directions_hash,dataset_hash,encoder_hash,"
      "error,wall_time\n";
  for (const CellResult& c : cells) {
    out += std::string(method_name(c.method)) + "," + std::to_string(c.seed) + "," + (c.ok ? "ok" : "error") +
           "," + num(c.codes.mig) + "," + num(c.ideal.mig) + "," + num(c.codes.modularity) + "," +
           num(c.ideal.modularity) + "," + num(c.codes.unfairness) + "," + num(c.ideal.unfairness) + "," +
           num(c.encoder_mse) + "," + num(c.target_variance) + "," + hex(c.config_hash) + "," +
           hex(c.generator_hash) + "," + hex(c.directions_hash) + "," + hex(c.dataset_hash) + "," +
           hex(c.encoder_hash) + "," + csv_field(c.error) + "," + num(c.wall_seconds) + "\n";
  }
  return out;
}

std::string summary_text(const std::vector<CellResult>& cells, const RunConfig& cfg) {
  struct Column {
    const char* name;
    double (*get)(const CellResult&);
  };
  static const Column columns[] = {
      {"mig", [](const CellResult& c) { return c.codes.mig; }},
      {"mig_ideal", [](const CellResult& c) { return c.ideal.mig; }},
      {"modularity", [](const CellResult& c) { return c.codes.modularity; }},
      {"modularity_ideal", [](const CellResult& c) { return c.ideal.modularity; }},
      {"unfairness", [](const CellResult& c) { return c.codes.unfairness; }},
      {"unfairness_ideal", [](const CellResult& c) { return c.ideal.unfairness; }},
      {"encoder_mse", [](const CellResult& c) { return c.encoder_mse; }},
  };
  std::string out = "config_hash = " + hex(config_hash(cfg)) + "\n";
  for (const Method m : cfg.discover.methods) {
    std::size_t ok = 0, total = 0;
    for (const CellResult& c : cells) {
      if (c.method != m) continue;
      ++total;
      ok += c.ok ? 1 : 0;
    }
    out += "\n[" + std::string(method_name(m)) + "]\ncells = " + std::to_string(ok) + "/" +
           std::to_string(total) + "\n";
    for (const Column& col : columns) {
      double sum = 0.0, sq = 0.0;
      for (const CellResult& c : cells) {
        if (c.method == m && c.ok) sum += col.get(c);
      }
      const double mean = ok ? sum / static_cast<double>(ok) : std::nan("");
      for (const CellResult& c : cells) {
        if (c.method == m && c.ok) sq += (col.get(c) - mean) * (col.get(c) - mean);
      }
      const double sd = ok > 1 ? std::sqrt(sq / static_cast<double>(ok - 1)) : (ok ? 0.0 : std::nan(""));
      char line[128];
      std::snprintf(line, sizeof line, "%s = %.4f +/- %.4f\n", col.name, mean, sd);
      out += line;
    }
  }
  return out;
}

}  // namespace latdis
