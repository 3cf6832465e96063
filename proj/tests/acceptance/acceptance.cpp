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

// Acceptance run: one PASS/FAIL line per criterion.
//
//   latdis_acceptance <sweep.ini> <scratch dir> [step]
//
// With a step name (autodiff, power_svd, ..., end_to_end_sweep) only that
// step runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "latdis/artifact.hpp"
#include "latdis/blob_world.hpp"
#include "latdis/config.hpp"
#include "latdis/directions.hpp"
#include "latdis/linalg.hpp"
#include "latdis/metrics.hpp"
#include "latdis/pipeline.hpp"
#include "latdis/power_svd.hpp"
#include "oracles.hpp"

using namespace latdis;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr std::size_t kAutodiffProbes = 50;
constexpr double kAutodiffRel = 1e-6;
constexpr double kAdjointTol = 1e-10;
constexpr double kAutodiffSeconds = 30.0;

constexpr std::size_t kSvdMatrices = 100;
constexpr std::size_t kSvdRank = 5;
constexpr double kSvdGap = 1e-3;
constexpr double kSvdValueRel = 1e-8;
constexpr double kSvdCos = 1.0 - 1e-8;
constexpr double kSvdSubspaceAngle = 1e-4;
constexpr double kSvdSeconds = 60.0;

constexpr double kLinearCos = 1.0 - 1e-8;

constexpr double kCfCos = 1.0 - 1e-8;
constexpr double kDsCos = 0.98;
constexpr double kGsAngleDegrees = 10.0;
constexpr std::size_t kGsSamples = 20000;

constexpr std::size_t kMiInstances = 200;
constexpr double kMiTol = 1e-12;
constexpr double kMigTol = 1e-9;

constexpr double kSweepSeconds = 600.0;
constexpr double kMinCodeMig = 0.5;
constexpr double kMinIdealMig = 0.7;
constexpr double kMaxMseRatio = 0.05;

constexpr std::size_t kRandomArtifacts = 1000;

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

double seconds_since(clock_type::time_point t) {
  return std::chrono::duration<double>(clock_type::now() - t).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Tensor with_spectrum(std::size_t m, std::size_t n, const std::vector<double>& s, Rng& rng, Tensor* v_out) {
  const Tensor u = linalg::random_orthogonal(m, rng);
  const Tensor v = linalg::random_orthogonal(n, rng);
  Tensor us({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n && j < s.size(); ++j) us.at(i, j) = u.at(i, j) * s[j];
  if (v_out) *v_out = v;
  return linalg::matmul(us, linalg::transpose(v));
}

void autodiff() {
  const auto t0 = clock_type::now();
  Rng rng(100);
  auto cases = oracle::layer_cases(rng);
  oracle::ProbeStats worst;
  std::string worst_case;
  std::size_t kinds = 0;
  bool seen[16] = {};
  for (auto& c : cases) {
    const auto st = oracle::probe_layer(*c.layer, c.sample, kAutodiffProbes, rng);
    const double m = std::max({st.jvp_rel, st.vjp_rel, st.param_rel});
    if (m > std::max({worst.jvp_rel, worst.vjp_rel, worst.param_rel})) worst_case = c.name;
    worst.jvp_rel = std::max(worst.jvp_rel, st.jvp_rel);
    worst.vjp_rel = std::max(worst.vjp_rel, st.vjp_rel);
    worst.param_rel = std::max(worst.param_rel, st.param_rel);
    worst.adjoint = std::max(worst.adjoint, st.adjoint);
    const int k = static_cast<int>(c.layer->kind());
    if (!seen[k]) ++kinds;
    seen[k] = true;
  }
  const double secs = seconds_since(t0);
  const bool ok = kinds == 11 && worst.jvp_rel < kAutodiffRel && worst.vjp_rel < kAutodiffRel &&
                  worst.param_rel < kAutodiffRel && worst.adjoint <= kAdjointTol && secs < kAutodiffSeconds;
  report(ok, "autodiff",
         std::to_string(kinds) + " layer kinds x " + std::to_string(kAutodiffProbes) + " probes, " +
             fmt("jvp %.2e vjp %.2e param %.2e adjoint %.2e", worst.jvp_rel, worst.vjp_rel, worst.param_rel,
                 worst.adjoint) +
             " (worst " + worst_case + ")" + fmt(", %.1f s", secs));
}

void power_svd_oracle() {
  const auto t0 = clock_type::now();
  Rng rng(200);
  double worst_value = 0.0, worst_cos = 1.0;
  std::size_t done = 0, rejected = 0, unconverged = 0;
  while (done < kSvdMatrices) {
    const Tensor a = rng.normal_tensor({50, 30});
    const auto ref = oracle::jacobi_svd(a);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kSvdRank; ++i) {
      gap = std::min(gap, (ref.values[i] - ref.values[i + 1]) / ref.values[0]);
    }
    if (gap <= kSvdGap) {
      ++rejected;
      continue;
    }
    Rng prng(done, 201);
    const PowerSvdResult got = power_svd(matrix_operator(a), kSvdRank, prng);
    unconverged += got.converged ? 0 : 1;
    for (std::size_t j = 0; j < kSvdRank; ++j) {
      worst_value = std::max(worst_value, std::fabs(got.values[j] - ref.values[j]) / ref.values[j]);
      double c = 0.0;
      for (std::size_t i = 0; i < 30; ++i) c += got.vectors.at(i, j) * ref.v[j][i];
      worst_cos = std::min(worst_cos, std::fabs(c));
    }
    ++done;
  }
  // Degenerate leading pair.
  double worst_angle = 0.0;
  for (int t = 0; t < 5; ++t) {
    Tensor v;
    const Tensor a = with_spectrum(50, 30, {4.0, 4.0, 3.0, 2.0, 1.0, 0.5}, rng, &v);
    Rng prng(t, 202);
    const PowerSvdResult got = power_svd(matrix_operator(a), 3, prng);
    worst_angle = std::max(worst_angle, oracle::max_principal_angle(linalg::leading_columns(v, 2),
                                                                    linalg::leading_columns(got.vectors, 2)));
  }
  const double secs = seconds_since(t0);
  const bool ok = unconverged == 0 && worst_value < kSvdValueRel && worst_cos > kSvdCos &&
                  worst_angle < kSvdSubspaceAngle && secs < kSvdSeconds;
  report(ok, "power_svd",
         std::to_string(done) + " matrices 50x30 (" + std::to_string(rejected) + " redrawn for gap), " +
             fmt("value rel %.2e, min |cos| 1-%.2e, degenerate angle %.2e, %.1f s", worst_value, 1.0 - worst_cos,
                 worst_angle, secs));
}

void cf_equals_ds() {
  Rng rng(300);
  double worst = 1.0;
  for (int t = 0; t < 10; ++t) {
    const std::size_t d = 12;
    std::vector<double> s;
    for (std::size_t i = 0; i < d; ++i) s.push_back(10.0 * std::pow(0.7, static_cast<double>(i)));
    Network synth(Shape{d});
    synth.add(Dense(with_spectrum(48, d, s, rng, nullptr), rng.normal_tensor({48})));
    synth.add(Affine(rng.uniform(0.5, 2.0), rng.normal()));
    synth.add(Reshape({3, 4, 4}));
    const GeneratorNetwork gen(std::nullopt, synth, 1.0, Tensor(Shape{d}));
    const DirectionSet cf = closed_form(gen, 6);
    Rng srng(t, 301);
    const DirectionSet ds = deep_spectral(gen, synth.depth(), 6, srng, rng.normal_tensor({d}));
    for (std::size_t j = 0; j < 6; ++j) {
      double c = 0.0;
      for (std::size_t i = 0; i < d; ++i) c += cf.directions.at(i, j) * ds.directions.at(i, j);
      worst = std::min(worst, std::fabs(c));
    }
  }
  report(worst > kLinearCos, "cf_equals_ds_linear", fmt("10 linear generators, min |cos| 1-%.2e", 1.0 - worst));
}

void ground_truth_recovery() {
  double cf_worst = 1.0, ds_worst = 1.0, gs_worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    BlobWorldConfig cfg;
    cfg.seed = seed;
    const BlobWorld world = make_blob_world(cfg);
    const GeneratorNetwork gen = make_entangled_generator(world);
    const Tensor truth = ground_truth_directions(world);
    for (double c : oracle::best_abs_cos(truth, closed_form(gen, 5).directions)) cf_worst = std::min(cf_worst, c);
    Rng srng(seed, kStreamSpectral);
    for (double c : oracle::best_abs_cos(truth, deep_spectral(gen, kImageTap, 5, srng).directions)) {
      ds_worst = std::min(ds_worst, c);
    }
    Rng grng(seed, kStreamGanSpace);
    gs_worst = std::max(gs_worst, oracle::max_principal_angle(truth, ganspace(gen, 5, grng, kGsSamples).directions));
  }
  const double gs_deg = gs_worst * 180.0 / M_PI;
  report(cf_worst > kCfCos && ds_worst > kDsCos && gs_deg < kGsAngleDegrees, "ground_truth_recovery",
         fmt("BlobWorld D=16 m=5, 3 worlds: CF min |cos| 1-%.2e, DS min |cos| %.4f, GS max angle %.2f deg",
             1.0 - cf_worst, ds_worst, gs_deg));
}

void metrics_oracle() {
  Rng rng(400);
  double worst = 0.0;
  for (std::size_t t = 0; t < kMiInstances; ++t) {
    const std::size_t n = 5 + rng.below(80);
    LabelMatrix c(n, 1 + rng.below(3)), f(n, 1 + rng.below(3));
    const int cl = 1 + static_cast<int>(rng.below(6)), fl = 1 + static_cast<int>(rng.below(6));
    for (int& v : c.values) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(cl)));
    for (int& v : f.values) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(fl)));
    const MutualInfoMatrix mi = mutual_info_matrix(c, f);
    for (std::size_t j = 0; j < c.cols; ++j) {
      std::vector<int> cj(n);
      for (std::size_t i = 0; i < n; ++i) cj[i] = c.at(i, j);
      for (std::size_t m = 0; m < f.cols; ++m) {
        std::vector<int> fm(n);
        for (std::size_t i = 0; i < n; ++i) fm[i] = f.at(i, m);
        worst = std::max(worst, std::fabs(mi.mi.at(j, m) - oracle::brute_force_mi(cj, fm)));
      }
    }
  }
  // Perfect codes on a fully crossed factor grid.
  LabelMatrix grid(2 * 125, 3);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    grid.at(r, 0) = static_cast<int>(r % 5);
    grid.at(r, 1) = static_cast<int>((r / 5) % 5);
    grid.at(r, 2) = static_cast<int>((r / 25) % 5);
  }
  const double perfect = mig(mutual_info_matrix(grid, grid));
  MutualInfoMatrix onehot;
  onehot.mi = Tensor::matrix(3, 3, {0.0, 0.9, 0.0, 0.4, 0.0, 0.0, 0.0, 0.0, 1.3});
  onehot.code_entropy = {1, 1, 1};
  onehot.factor_entropy = {1, 1, 1};
  const double mod = modularity(onehot);
  // Codes that read only the target factor; two identical halves.
  Tensor codes({grid.rows, 1});
  for (std::size_t r = 0; r < grid.rows; ++r) codes.at(r, 0) = grid.at(r, 1);
  const double unf = unfairness(codes, grid, 0, 1).average;
  const bool ok = worst <= kMiTol && std::fabs(perfect - 1.0) <= kMigTol && mod == 1.0 && unf == 0.0;
  report(ok, "metrics_oracle",
         fmt("%.0f MI instances max diff %.2e, perfect MIG %.12f, one-hot modularity %.3f", kMiInstances, worst,
             perfect, mod) +
             fmt(", unfairness %.3f", unf));
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string body = ss.str();
    if (e.path().filename() == "cells.csv") {
      std::stringstream in(body);
      std::string line, stripped;
      while (std::getline(in, line)) stripped += line.substr(0, line.rfind(',')) + "\n";
      body = stripped;
    }
    out[fs::relative(e.path(), root).string()] = body;
  }
  return out;
}

void sweep(const fs::path& config, const fs::path& scratch) {
  RunConfig cfg = load_config(config);
  cfg.output.dir = (scratch / "sweep1").string();
  fs::remove_all(cfg.output.dir);
  const auto t0 = clock_type::now();
  const PipelineReport rep = run_pipeline(cfg);
  const double secs = seconds_since(t0);

  std::map<Method, std::vector<const CellResult*>> by;
  bool all_ok = true;
  for (const CellResult& c : rep.cells) {
    by[c.method].push_back(&c);
    all_ok &= c.ok;
  }
  auto mean = [&](Method m, auto get) {
    double s = 0.0;
    for (const CellResult* c : by[m]) s += get(*c);
    return s / static_cast<double>(by[m].size());
  };
  bool ok = all_ok && secs < kSweepSeconds && rep.cells.size() == cfg.output.seeds.size() * cfg.discover.methods.size();
  std::string detail = std::to_string(rep.cells.size()) + " cells" + fmt(" in %.1f s", secs);
  for (Method m : {Method::kClosedForm, Method::kDeepSpectral}) {
    double min_code = 1.0, min_ideal = 1.0, max_ratio = 0.0;
    for (const CellResult* c : by[m]) {
      min_code = std::min(min_code, c->codes.mig);
      min_ideal = std::min(min_ideal, c->ideal.mig);
      max_ratio = std::max(max_ratio, c->encoder_mse / c->target_variance);
    }
    ok &= !by[m].empty() && min_code >= kMinCodeMig && min_ideal >= kMinIdealMig && max_ratio < kMaxMseRatio;
    detail += "; " + std::string(method_name(m)) +
              fmt(" MIG min %.3f, ideal min %.3f, mse/var max %.4f", min_code, min_ideal, max_ratio);
  }
  const double cf_mig = mean(Method::kClosedForm, [](const CellResult& c) { return c.codes.mig; });
  const double ld_mig = mean(Method::kLatentDiscovery, [](const CellResult& c) { return c.codes.mig; });
  ok &= cf_mig > ld_mig - 1.0;
  for (Method m : {Method::kGanSpace, Method::kLatentDiscovery}) {
    detail += "; " + std::string(method_name(m)) +
              fmt(" MIG mean %.3f, ideal mean %.3f, mse/var mean %.4f",
                  mean(m, [](const CellResult& c) { return c.codes.mig; }),
                  mean(m, [](const CellResult& c) { return c.ideal.mig; }),
                  mean(m, [](const CellResult& c) { return c.encoder_mse / c.target_variance; }));
  }
  report(ok, "end_to_end_sweep", detail);

  // Determinism: move the first run aside and repeat it with the identical
  // config into the same directory.
  const fs::path first = scratch / "sweep1-first";
  fs::remove_all(first);
  fs::rename(cfg.output.dir, first);
  run_pipeline(cfg);
  const auto a = tree_contents(first), b = tree_contents(cfg.output.dir);
  std::size_t same = 0;
  for (const auto& [name, body] : a) {
    const auto it = b.find(name);
    same += (it != b.end() && it->second == body) ? 1 : 0;
  }
  const bool csv_same = a.count("cells.csv") && b.count("cells.csv") && a.at("cells.csv") == b.at("cells.csv");
  report(csv_same && same == a.size() && a.size() == b.size(), "determinism",
         std::string("rerun CSV ") + (csv_same ? "identical" : "differs") + " (wall_time excluded), " +
             std::to_string(same) + "/" + std::to_string(a.size()) + " output files byte-identical");
}

Tensor random_tensor(Rng& rng) {
  const std::size_t nd = 1 + rng.below(4);
  Shape s;
  for (std::size_t i = 0; i < nd; ++i) s.push_back(1 + rng.below(5));
  std::vector<double> v(numel(s));
  for (double& x : v) {
    switch (rng.below(6)) {
      case 0: x = -0.0; break;
      case 1: x = std::numeric_limits<double>::denorm_min() * static_cast<double>(rng.below(1000)); break;
      case 2: x = (rng.uniform() < 0.5 ? -1 : 1) * std::numeric_limits<double>::max(); break;
      default: x = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    }
  }
  return Tensor(s, v);
}

std::string random_name(Rng& rng) {
  std::string s;
  const std::size_t n = rng.below(24);
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>(1 + rng.below(255)));
  return s;
}

void serialization(const fs::path& scratch) {
  Rng rng(800);
  fs::create_directories(scratch);
  std::size_t roundtrips = 0, corruptions = 0, typed = 0, untyped = 0, silent = 0, noop = 0;
  for (std::size_t t = 0; t < kRandomArtifacts; ++t) {
    Artifact a;
    a.kind = static_cast<ArtifactKind>(rng.below(4));
    const std::size_t count = rng.below(6);
    for (std::size_t i = 0; i < count; ++i) {
      std::string name = random_name(rng) + "#" + std::to_string(i);
      a.put(std::move(name), random_tensor(rng));
    }
    const fs::path file = scratch / "a.latdis";
    save_artifact(file, a);
    const Artifact b = load_artifact(file);
    const auto bytes = encode_artifact(a);
    roundtrips += (a == b && encode_artifact(b) == bytes) ? 1 : 0;

    for (int c = 0; c < 5;) {
      auto bad = bytes;
      switch (rng.below(3)) {
        case 0: bad.resize(rng.below(bad.size())); break;
        case 1: {
          const std::size_t n = 1 + rng.below(8);
          for (std::size_t k = 0; k < n; ++k) bad[rng.below(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
          break;
        }
        default:
          bad.insert(bad.begin() + static_cast<std::ptrdiff_t>(rng.below(bad.size())),
                     static_cast<std::uint8_t>(rng.below(256)));
      }
      // Repeated flips of one byte can cancel out; that is not a corruption.
      if (bad == bytes) {
        ++noop;
        continue;
      }
      ++c;
      ++corruptions;
      try {
        (void)decode_artifact(bad);
        ++silent;
      } catch (const ArtifactError&) {
        ++typed;
      } catch (...) {
        ++untyped;
      }
    }
  }
  report(roundtrips == kRandomArtifacts && typed == corruptions, "serialization",
         std::to_string(roundtrips) + "/" + std::to_string(kRandomArtifacts) + " round-trips bitwise, " +
             std::to_string(typed) + "/" + std::to_string(corruptions) + " corruptions typed (" +
             std::to_string(untyped) + " untyped, " + std::to_string(silent) + " accepted, " +
             std::to_string(noop) + " no-op draws redrawn)");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3 && argc != 4) {
    std::fprintf(stderr, "usage: %s <sweep.ini> <scratch dir> [step]\n", argv[0]);
    return 2;
  }
  const fs::path config = argv[1], scratch = argv[2];
  const std::string only = argc == 4 ? argv[3] : "";
  fs::create_directories(scratch);
  const std::pair<const char*, std::function<void()>> steps[] = {
      {"autodiff", autodiff},
      {"power_svd", power_svd_oracle},
      {"cf_equals_ds_linear", cf_equals_ds},
      {"ground_truth_recovery", ground_truth_recovery},
      {"metrics_oracle", metrics_oracle},
      {"serialization", [&] { serialization(scratch / "artifacts"); }},
      {"end_to_end_sweep", [&] { sweep(config, scratch); }},
  };
  for (const auto& [name, fn] : steps) {
    if (!only.empty() && only != name) continue;
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d failed\n", failures);
  return failures ? 1 : 0;
}
