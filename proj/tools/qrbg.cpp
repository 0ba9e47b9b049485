// Copyright 2026 The qrbg Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qrbg: command-line front end for the simulated generator.
//
//   qrbg simulate  --mode single --events 1000000 --out run/
//   qrbg calibrate --log run/calibration.log --alpha 0.01
//   qrbg generate  --config gen.conf --events 1000000 --output raw.bits
//   qrbg extract   --input raw.bits --h-rate 0.96 --block-n 100000 --epsilon 2^-64
//   qrbg test      --input out.bits
//   qrbg pipeline  --config run.conf --report run/report.txt
//
// Exit codes: 0 ok, 2 insufficient entropy, 3 insufficient data, 4 I/O,
// 5 configuration or parameter error.

#include <CLI11.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qrbg/bitstream.hpp"
#include "qrbg/error.hpp"
#include "qrbg/extractor.hpp"
#include "qrbg/pipeline.hpp"
#include "qrbg/rng.hpp"
#include "qrbg/source_sim.hpp"
#include "qrbg/stat_tests.hpp"
#include "qrbg/tomography.hpp"

namespace fs = std::filesystem;
using namespace qrbg;

namespace {

constexpr int kUsageExit = 5;

// Flags shared by every subcommand that builds a PipelineConfig. Values are
// kept as text and fed through PipelineConfig::apply so the CLI and config
// files accept exactly the same syntax.
struct ConfigFlags {
  std::string config_path;
  std::deque<std::pair<std::string, std::string>> overrides;  // stable addresses
  std::vector<std::string> set;

  void add_to(CLI::App& app, bool with_generation) {
    app.add_option("--config", config_path, "key=value configuration file")
        ->check(CLI::ExistingFile);
    add(app, "--mode", "mode", "single | entangled | adversarial");
    add(app, "--seed", "seed", "master simulation seed");
    add(app, "--stokes", "stokes", "single-photon state s1,s2,s3");
    add(app, "--phase", "phase", "birefringence rotation (radians)");
    add(app, "--coherence", "coherence", "entangled-pair coherence");
    add(app, "--accidentals", "accidental_fraction", "accidental coincidence fraction");
    add(app, "--decomposition", "decomposition", "adversary terms w:s1/s2/s3;...");
    add(app, "--adversary-target", "adversary_target", "adversary's target state s1,s2,s3");
    add(app, "--calibration-events", "calibration_events", "events in the calibration run");
    add(app, "--out", "out", "output directory");
    if (with_generation) {
      add(app, "--events", "generation_events", "raw bits to generate, or auto");
      add(app, "--alpha", "alpha", "failure probability of the certified bound");
      add(app, "--confidence", "confidence",
          "clopper_pearson | empirical_bernstein | hoeffding");
      add(app, "--block-n", "block_n", "extractor block size");
      add(app, "--epsilon", "epsilon", "extractor distance, 2^-K or decimal");
      add(app, "--hash-seed", "hash_seed", "system | file:PATH | prng:N");
      add(app, "--target-output-bits", "target_output_bits", "with --events auto");
      add(app, "--recalibrate-every", "recalibrate_every", "re-certify every N raw bits");
      add(app, "--tests", "tests", "all | none | comma list");
      add(app, "--threads", "threads", "extractor threads (0: all cores)");
    }
    app.add_option("--set", set, "extra key=value config entries")->take_all();
  }

  pipeline::PipelineConfig build() const {
    pipeline::PipelineConfig c = config_path.empty() ? pipeline::PipelineConfig{}
                                                     : pipeline::PipelineConfig::load(config_path);
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) c.apply(key, value);
    }
    for (const auto& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorKind::config, "--set expects key=value: " + kv);
      c.apply(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
  }

 private:
  void add(CLI::App& app, const std::string& flag, const std::string& key,
           const std::string& help) {
    overrides.emplace_back(key, std::string());
    app.add_option(flag, overrides.back().second, help);
  }
};

std::unique_ptr<extract::SeedProvider> seed_provider(const std::string& seed_file,
                                                     const std::string& hash_seed) {
  if (!seed_file.empty()) return std::make_unique<extract::FileSeedProvider>(seed_file);
  pipeline::PipelineConfig c;
  c.apply("hash_seed", hash_seed);
  return c.seed_provider();
}

// Raw bits from a QRBGBITS file or a generation event log.
BitStream load_raw(const fs::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::string magic(kBitFileMagic.size(), '\0');
  probe.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (magic == kBitFileMagic) return read_bit_file(path).bits;
  return source::generation_bits(source::read_event_log(path));
}

void write_text(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream os(*path, std::ios::trunc);
  if (!os || !(os << text)) fail(ErrorKind::io, "cannot write '" + *path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qrbg - self-calibrating quantum random bit generator (simulated source)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qrbg 0.1.0");

  // simulate
  auto* sim = app.add_subcommand("simulate", "write calibration and generation event logs");
  ConfigFlags sim_flags;
  sim_flags.add_to(*sim, false);
  std::size_t sim_events = 1'000'000;
  sim->add_option("--events", sim_events, "generation events")->check(CLI::PositiveNumber);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "tomography and certified rate from a log");
  std::string cal_log;
  double cal_alpha = 0.01;
  std::string cal_method = "clopper_pearson";
  std::size_t cal_floor = tomography::kDefaultCountFloor;
  std::optional<std::string> cal_report;
  cal->add_option("--log", cal_log, "calibration event log")->required();
  cal->add_option("--alpha", cal_alpha, "failure probability");
  cal->add_option("--confidence", cal_method, "confidence bound");
  cal->add_option("--count-floor", cal_floor, "minimum outcomes per basis");
  cal->add_option("--report", cal_report, "write the state report here");

  // generate
  auto* gen = app.add_subcommand("generate", "raw computational-basis bits from the source");
  ConfigFlags gen_flags;
  gen_flags.add_to(*gen, true);
  std::string gen_output;
  std::string gen_from_log;
  gen->add_option("--output", gen_output, "raw bit file (default OUT/generation.bits)");
  gen->add_option("--from-log", gen_from_log, "convert a generation event log instead");

  // extract
  auto* ext = app.add_subcommand("extract", "Toeplitz extraction of a raw bit stream");
  std::string ext_input, ext_output, ext_seed_file, ext_calibration;
  std::string ext_hash_seed = "system";
  std::optional<double> ext_h;
  double ext_alpha = 0.01;
  std::size_t ext_block = 100'000;
  std::string ext_epsilon = "2^-64";
  unsigned ext_threads = 0;
  ext->add_option("--input", ext_input, "raw bit file or generation log")->required();
  ext->add_option("--output", ext_output, "extracted bit file")->required();
  auto* h_opt = ext->add_option("--h-rate", ext_h, "certified min-entropy per raw bit");
  ext->add_option("--calibration", ext_calibration, "certify from this calibration log")
      ->excludes(h_opt);
  ext->add_option("--alpha", ext_alpha, "failure probability (with --calibration)");
  ext->add_option("--block-n", ext_block, "block size n")->check(CLI::PositiveNumber);
  ext->add_option("--epsilon", ext_epsilon, "2^-K or decimal");
  ext->add_option("--seed-file", ext_seed_file, "role=seed bit file");
  ext->add_option("--hash-seed", ext_hash_seed, "system | prng:N (without --seed-file)");
  ext->add_option("--threads", ext_threads, "worker threads (0: all cores)");

  // test
  auto* tst = app.add_subcommand("test", "statistical battery on a bit file");
  std::string tst_input;
  std::optional<std::string> tst_report;
  tst->add_option("--input", tst_input, "QRBGBITS file")->required();
  tst->add_option("--report", tst_report, "write the test report here");

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "calibrate, certify, generate, extract, test, report");
  ConfigFlags pip_flags;
  pip_flags.add_to(*pip, true);
  std::string pip_seed_file;
  std::optional<std::string> pip_report;
  pip->add_option("--seed-file", pip_seed_file, "role=seed bit file for the extractor");
  pip->add_option("--report", pip_report, "report path (default OUT/report.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (sim->parsed()) {
      const auto c = sim_flags.build();
      c.validate();
      const auto [calib, genlog] = pipeline::simulate(c, sim_events);
      std::cout << "calibration_log=" << calib.string() << "\n"
                << "generation_log=" << genlog.string() << "\n";
    } else if (cal->parsed()) {
      const auto method = entropy::parse_method(cal_method);
      if (!method) fail(ErrorKind::config, "unknown confidence bound '" + cal_method + "'");
      const auto c = tomography::reconstruct(source::read_event_log(cal_log), cal_alpha,
                                             *method, cal_floor);
      std::ostringstream os;
      tomography::write_state_report(os, c);
      write_text(cal_report, os.str());
    } else if (gen->parsed()) {
      const auto c = gen_flags.build();
      BitFileHeader h;
      h.set("role", "raw");
      BitStream raw;
      if (!gen_from_log.empty()) {
        const auto log = source::read_event_log(gen_from_log);
        raw = source::generation_bits(log);
        h.set("source", log.source);
        h.set("seed", std::to_string(log.rng_seed));
      } else {
        c.validate();
        if (!c.generation_events) fail(ErrorKind::config, "generate needs --events N");
        const auto model = c.source_model(pipeline::generation_seed(c.seed));
        raw = source::sample_raw_bits(model, *c.generation_events);
        h.set("source", model.describe());
        h.set("seed", std::to_string(model.rng_seed));
      }
      h.set("rng", SimRng::kName);
      const fs::path out = gen_output.empty() ? c.out / "generation.bits" : fs::path(gen_output);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_bit_file(out, h, raw);
      std::cout << "raw_bits=" << raw.size() << "\nfile=" << out.string() << "\n";
    } else if (ext->parsed()) {
      entropy::EntropyRate h;
      if (ext_h) {
        h = entropy::EntropyRate(*ext_h);
      } else if (!ext_calibration.empty()) {
        h = tomography::reconstruct(source::read_event_log(ext_calibration), ext_alpha).rate;
      } else {
        fail(ErrorKind::config, "extract needs --h-rate or --calibration");
      }
      const auto params =
          extract::ExtractorParams::make(h, ext_block, pipeline::parse_epsilon(ext_epsilon));
      const BitStream raw = load_raw(ext_input);
      auto seeds = seed_provider(ext_seed_file, ext_hash_seed);
      const auto result = extract::extract_stream(raw, params, *seeds, ext_threads);
      write_bit_file(ext_output, result.header(), result.output);
      std::cout << std::setprecision(10) << "h_rate=" << h.bits_per_sample() << "\n"
                << "block_n=" << params.n << "\nblock_m=" << params.m
                << "\nratio=" << params.ratio() << "\nblocks=" << result.blocks
                << "\noutput_bits=" << result.output.size()
                << "\ndiscarded_bits=" << result.discarded_bits << "\n";
    } else if (tst->parsed()) {
      const auto file = read_bit_file(tst_input);
      const auto results =
          stats::run_battery(file.bits, stats::BatteryConfig::for_length(file.bits.size()));
      std::ostringstream os;
      os << "bits=" << file.bits.size() << "\n";
      stats::write_test_report(os, results);
      os << "pass_proportion=" << stats::pass_proportion(results) << "\n";
      write_text(tst_report, os.str());
    } else if (pip->parsed()) {
      auto c = pip_flags.build();
      if (!pip_seed_file.empty()) c.apply("hash_seed", "file:" + pip_seed_file);
      const auto r = pipeline::run(c, pip_report ? std::optional<fs::path>(*pip_report)
                                                 : std::nullopt);
      std::cout << std::setprecision(10) << "certified_minentropy_rate="
                << r.certified.bits_per_sample() << "\nblock_m=" << r.block_m
                << "\nratio=" << r.ratio() << "\noutput_bits=" << r.output_bits
                << "\npass_proportion=" << stats::pass_proportion(r.tests) << "\nreport="
                << (pip_report ? fs::path(*pip_report) : c.out / "report.txt").string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "qrbg: " << e.what() << "\n";
    return pipeline::exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "qrbg: " << e.what() << "\n";
    return pipeline::exit_code(ErrorKind::io);
  }
  return 0;
}
