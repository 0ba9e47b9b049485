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

#pragma once

// End-to-end generator run: calibrate the source by tomography, certify a
// min-entropy rate, generate raw bits, extract, test and report.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrbg/error.hpp"
#include "qrbg/extractor.hpp"
#include "qrbg/minentropy.hpp"
#include "qrbg/source_sim.hpp"
#include "qrbg/stat_tests.hpp"
#include "qrbg/tomography.hpp"

namespace qrbg::pipeline {

enum class SourceMode { single, entangled, adversarial };

/// Flat key=value configuration. Every key has a default; unknown keys and
/// malformed values are config errors.
///
///   mode                  single | entangled | adversarial
///   seed                  master simulation seed (u64)
///   stokes                s1,s2,s3 of the single-photon state
///   phase                 birefringence rotation of (s1, s2), radians
///   coherence             entangled-pair coherence in [0, 1]
///   accidental_fraction   accidental share of coincidences in [0, 1)
///   decomposition         adversary terms  w:s1/s2/s3;w:s1/s2/s3;...
///   adversary_target      s1,s2,s3 -- adversary uses its optimal
///                         two-term decomposition of this state
///   calibration_events    events in the Z/X/Y blocked calibration run
///   alpha                 failure probability of the certified bound
///   confidence            clopper_pearson | empirical_bernstein | hoeffding
///   count_floor           minimum outcomes per basis
///   generation_events     raw bits to generate, or "auto"
///   target_output_bits    with generation_events=auto: smallest number of
///                         whole blocks whose output reaches this count
///   block_n               extractor block size
///   epsilon               statistical distance, "2^-K" or a decimal
///   hash_seed             system | file:PATH | prng:U64
///   tests                 all | none | comma list of test names
///   recalibrate_every     re-certify every N generated bits (0: once)
///   write_generation_log  1: also write the generation run as an event log
///   threads               extractor worker threads (0: hardware)
///   out                   output directory
struct PipelineConfig {
  SourceMode mode = SourceMode::single;
  std::uint64_t seed = 1;
  qubit::Vec3 stokes{1.0, 0.0, 0.0};
  double phase = 0.0;
  double coherence = 1.0;
  double accidental_fraction = 0.0;
  std::string decomposition;
  std::optional<qubit::Vec3> adversary_target;
  std::size_t calibration_events = 3'000'000;
  double alpha = 0.01;
  entropy::ConfidenceMethod confidence = entropy::ConfidenceMethod::clopper_pearson;
  std::size_t count_floor = tomography::kDefaultCountFloor;
  std::optional<std::size_t> generation_events = 1'000'000;  // nullopt: auto
  std::size_t target_output_bits = 0;
  std::size_t block_n = 100'000;
  double epsilon = 0x1.0p-64;
  std::string hash_seed = "system";
  std::string tests = "all";
  std::size_t recalibrate_every = 0;
  bool write_generation_log = false;
  unsigned threads = 0;
  std::filesystem::path out = "qrbg-out";

  /// Sets one key; throws config errors.
  void apply(std::string_view key, std::string_view value);
  /// Reads `key=value` lines; '#' starts a comment line.
  static PipelineConfig parse(std::istream& is);
  static PipelineConfig load(const std::filesystem::path& path);
  /// Normalized key=value echo, one per line, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;

  /// Source model for the given run seed.
  source::SourceModel source_model(std::uint64_t run_seed) const;
  stats::BatteryConfig battery(std::size_t n_bits) const;
  std::unique_ptr<extract::SeedProvider> seed_provider() const;
  /// Cross-field checks (positive counts, parameter ranges).
  void validate() const;
};

double parse_epsilon(std::string_view text);
std::string format_epsilon(double epsilon);
std::string_view mode_name(SourceMode mode);
/// Parses `w:s1/s2/s3;...` into a decomposition.
qubit::Decomposition parse_decomposition(std::string_view text);

/// Stage names used to tag errors.
enum class Stage { simulate, calibrate, certify, generate, extract, verify, test, report };
std::string_view stage_name(Stage s);

/// Library error annotated with the stage it came from.
class StageError : public Error {
 public:
  StageError(Stage stage, const Error& inner)
      : Error(inner.kind(), std::string(stage_name(stage)) + ": " + inner.what()),
        stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct FileDigest {
  std::string name;
  std::uint64_t bytes = 0;
  std::string sha256;
};

std::string sha256_file(const std::filesystem::path& path);

struct RunReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<tomography::Certification> calibrations;
  entropy::EntropyRate certified;
  std::size_t raw_bits = 0;
  std::size_t blocks = 0;
  long long block_m = 0;
  std::size_t block_n = 0;
  double epsilon = 0.0;
  std::size_t output_bits = 0;
  std::size_t discarded_bits = 0;
  std::string seed_source;
  std::vector<stats::TestResult> tests;
  std::vector<FileDigest> files;
  std::string created_utc;

  double ratio() const {
    return block_n ? static_cast<double>(block_m) / static_cast<double>(block_n) : 0.0;
  }
  void write(std::ostream& os) const;
};

/// Writes the calibration log and the generation log (all-Z) with distinct
/// sub-seeds of config.seed. Returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> simulate(const PipelineConfig& config,
                                                                  std::size_t generation_events);

/// Runs every stage, failing fast with a StageError. Writes the run report
/// to `report_path` (default: out/report.txt).
RunReport run(const PipelineConfig& config,
              std::optional<std::filesystem::path> report_path = std::nullopt);

/// Sub-seeds derived from the master seed.
std::uint64_t calibration_seed(std::uint64_t master, std::size_t round);
std::uint64_t generation_seed(std::uint64_t master);

/// Process exit code for an error kind: 2 insufficient entropy, 3
/// insufficient data, 4 I/O, 5 configuration or parameter problems.
int exit_code(ErrorKind kind);

}  // namespace qrbg::pipeline
