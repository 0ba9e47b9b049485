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

#include "qrbg/pipeline.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrbg/error.hpp"

using namespace qrbg;
using namespace qrbg::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "qrbg-pipeline-test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig small_config(const std::string& name) {
  PipelineConfig c;
  c.calibration_events = 30000;
  c.generation_events = 50000;
  c.block_n = 4096;
  c.epsilon = 0x1.0p-32;
  c.hash_seed = "prng:3";
  c.tests = "monobit,runs";
  c.stokes = {0.95, 0.0, 0.1};
  c.seed = 12;
  c.out = fresh_dir(name);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParseAndEcho) {
  std::istringstream is(
      "# comment\n"
      "mode = entangled\n"
      "coherence=0.9\n"
      "accidental_fraction=0.05\n"
      "calibration_events=3e5\n"
      "epsilon=2^-40\n"
      "generation_events=auto\n"
      "target_output_bits=1000000\n"
      "hash_seed=prng:7\n");
  const auto c = PipelineConfig::parse(is);
  EXPECT_EQ(c.mode, SourceMode::entangled);
  EXPECT_EQ(c.calibration_events, 300000U);
  EXPECT_EQ(c.epsilon, 0x1.0p-40);
  EXPECT_FALSE(c.generation_events.has_value());
  bool saw_eps = false;
  for (const auto& [k, v] : c.echo()) {
    if (k == "epsilon") {
      EXPECT_EQ(v, "2^-40");
      saw_eps = true;
    }
  }
  EXPECT_TRUE(saw_eps);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, Rejections) {
  const auto kind = [](const std::string& text) {
    std::istringstream is(text);
    try {
      PipelineConfig::parse(is).validate();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  EXPECT_EQ(kind("colour=blue\n"), ErrorKind::config);
  EXPECT_EQ(kind("mode=quantum\n"), ErrorKind::config);
  EXPECT_EQ(kind("alpha=1.5\n"), ErrorKind::config);
  EXPECT_EQ(kind("epsilon=2\n"), ErrorKind::config);
  EXPECT_EQ(kind("stokes=1,1,1\n"), ErrorKind::config);
  EXPECT_EQ(kind("tests=monobit,dieharder\n"), ErrorKind::config);
  EXPECT_EQ(kind("generation_events=auto\n"), ErrorKind::config);
  EXPECT_EQ(kind("mode=adversarial\n"), ErrorKind::config);
  EXPECT_EQ(kind("no equals sign\n"), ErrorKind::config);
  EXPECT_EQ(kind("mode=adversarial\ndecomposition=0.5:0/0/1;0.4:0/0/-1\n"), ErrorKind::config);
}

TEST(Config, EpsilonAndDecompositionSyntax) {
  EXPECT_EQ(parse_epsilon("2^-64"), 0x1.0p-64);
  EXPECT_EQ(parse_epsilon("0.25"), 0.25);
  EXPECT_EQ(format_epsilon(0x1.0p-64), "2^-64");
  const auto d = parse_decomposition("0.6875:0.6/0/0.8; 0.3125:0.6/0/-0.8");
  ASSERT_EQ(d.size(), 2U);
  EXPECT_DOUBLE_EQ(d[1].weight, 0.3125);
  EXPECT_DOUBLE_EQ(d[1].state.bloch().s3(), -0.8);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ErrorKind::insufficient_entropy), 2);
  EXPECT_EQ(exit_code(ErrorKind::insufficient_data), 3);
  EXPECT_EQ(exit_code(ErrorKind::empty_input), 3);
  EXPECT_EQ(exit_code(ErrorKind::io), 4);
  EXPECT_EQ(exit_code(ErrorKind::config), 5);
  EXPECT_EQ(exit_code(ErrorKind::parameter), 5);
}

TEST(Pipeline, SmallRunAccounting) {
  const auto c = small_config("small");
  const auto r = run(c);
  EXPECT_EQ(r.blocks, 50000U / 4096U);
  EXPECT_EQ(r.output_bits, r.blocks * static_cast<std::size_t>(r.block_m));
  EXPECT_EQ(r.discarded_bits, 50000U % 4096U);
  const auto f = read_bit_file(c.out / "extracted.bits");
  EXPECT_EQ(f.bits.size(), r.output_bits);
  EXPECT_EQ(f.header.require("seed_source"), "prng:mt19937_64:3");
  const auto raw = read_bit_file(c.out / "generation.bits");
  EXPECT_EQ(raw.header.require("role"), "raw");
  EXPECT_EQ(raw.bits.size(), 50000U);

  const std::string report = slurp(c.out / "report.txt");
  for (const char* section : {"[config]", "[tomography]", "[certification]", "[extraction]",
                              "[tests]", "[files]"}) {
    EXPECT_NE(report.find(section), std::string::npos) << section;
  }
  EXPECT_NE(report.find("sha256="), std::string::npos);
  EXPECT_NE(report.find("test=monobit"), std::string::npos);
  EXPECT_EQ(r.tests.size(), 2U);
  EXPECT_EQ(r.calibrations.size(), 1U);
  EXPECT_GT(r.certified.bits_per_sample(), 0.5);
  EXPECT_LT(r.certified, entropy::f_rho(qubit::StokesVector(0.95, 0, 0.1)));
}

TEST(Pipeline, SameSeedsSameBytes) {
  auto a = small_config("det-a");
  auto b = small_config("det-b");
  run(a);
  run(b);
  for (const char* name : {"calibration.log", "generation.bits", "extracted.bits"}) {
    EXPECT_EQ(slurp(a.out / name), slurp(b.out / name)) << name;
  }
  auto c = small_config("det-c");
  c.seed = 13;
  run(c);
  EXPECT_NE(slurp(a.out / "generation.bits"), slurp(c.out / "generation.bits"));
}

TEST(Pipeline, SubSeedsAreSeparated) {
  for (std::uint64_t master : {0ULL, 1ULL, 12ULL, ~0ULL}) {
    for (std::size_t round = 0; round < 100; ++round) {
      EXPECT_NE(calibration_seed(master, round), generation_seed(master));
    }
  }
}

TEST(Pipeline, ZeroCoherenceAbortsBeforeExtraction) {
  auto c = small_config("zero");
  c.stokes = {0.0, 0.0, 0.6};
  try {
    run(c);
    FAIL() << "expected insufficient entropy";
  } catch (const StageError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_entropy);
    EXPECT_EQ(e.stage(), Stage::certify);
    EXPECT_EQ(exit_code(e.kind()), 2);
  }
  EXPECT_FALSE(fs::exists(c.out / "extracted.bits"));
  EXPECT_FALSE(fs::exists(c.out / "generation.bits"));
}

TEST(Pipeline, TooFewCalibrationEvents) {
  auto c = small_config("few");
  c.calibration_events = 200;  // ~67 per basis, below the floor of 100
  try {
    run(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
    EXPECT_EQ(e.stage(), Stage::calibrate);
  }
}

TEST(Pipeline, MissingSeedFile) {
  auto c = small_config("noseed");
  c.hash_seed = "file:" + (c.out / "absent.bits").string();
  try {
    run(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_EQ(e.stage(), Stage::extract);
  }
}

TEST(Pipeline, RecalibrationTakesTheWorstRound) {
  auto c = small_config("recal");
  c.recalibrate_every = 20000;
  const auto r = run(c);
  ASSERT_EQ(r.calibrations.size(), 3U);
  for (const auto& cal : r.calibrations) EXPECT_LE(r.certified, cal.rate);
  EXPECT_TRUE(fs::exists(c.out / "calibration.2.log"));
}

TEST(Pipeline, AutoGenerationReachesTarget) {
  auto c = small_config("auto");
  c.generation_events.reset();
  c.target_output_bits = 30000;
  const auto r = run(c);
  EXPECT_GE(r.output_bits, 30000U);
  EXPECT_LT(r.output_bits - static_cast<std::size_t>(r.block_m), 30000U);
  EXPECT_EQ(r.discarded_bits, 0U);
}

TEST(Pipeline, AdversarialSourceIsCertifiedAtTheBound) {
  auto c = small_config("adv");
  c.mode = SourceMode::adversarial;
  c.adversary_target = qubit::Vec3{0.6, 0.0, 0.3};
  c.calibration_events = 300000;
  c.block_n = 20000;
  const auto r = run(c);
  EXPECT_NEAR(r.calibrations[0].tomography.s_hat.s1(), 0.6, 0.01);
  EXPECT_NEAR(r.calibrations[0].tomography.s_hat.s3(), 0.3, 0.01);
  EXPECT_LT(r.certified.bits_per_sample(), 0.152003093445049985 + 0.01);
}

TEST(Pipeline, SimulateWritesBothLogs) {
  auto c = small_config("sim");
  const auto [calib, gen] = simulate(c, 1000);
  const auto g = source::read_event_log(gen);
  EXPECT_EQ(g.size(), 1000U);
  EXPECT_EQ(source::generation_bits(g).size(), 1000U);
  EXPECT_EQ(source::read_event_log(calib).size(), 30000U);
  EXPECT_NE(source::read_event_log(calib).rng_seed, g.rng_seed);
}
