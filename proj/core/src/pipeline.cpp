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

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include "qrbg/error.hpp"
#include "qrbg/rng.hpp"

namespace qrbg::pipeline {
namespace {

std::string fmt(double v, int precision = 17) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void config_fail(std::string_view key, std::string_view value, const char* why) {
  fail(ErrorKind::config, "config key '" + std::string(key) + "' = '" + std::string(value) +
                              "': " + why);
}

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    config_fail(key, text, "expected a number");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  // Allow scientific notation for counts, e.g. 1e6.
  const double d = parse_real(key, text);
  if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
    config_fail(key, text, "expected a non-negative integer");
  }
  return static_cast<std::uint64_t>(d);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  config_fail(key, text, "expected 0 or 1");
}

qubit::Vec3 parse_vec3(std::string_view key, std::string_view text) {
  double v[3];
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const auto comma = text.find(',', start);
    if ((i < 2) != (comma != std::string_view::npos)) {
      config_fail(key, text, "expected s1,s2,s3");
    }
    const auto end = i < 2 ? comma : text.size();
    v[i] = parse_real(key, trim(text.substr(start, end - start)));
    start = end + 1;
  }
  return {v[0], v[1], v[2]};
}

const std::vector<std::string>& known_tests() {
  static const std::vector<std::string> names = {
      "monobit", "block_frequency", "runs", "longest_run_of_ones",
      "cumulative_sums", "serial", "approximate_entropy"};
  return names;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <class F>
auto in_stage(Stage stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, Error(ErrorKind::io, e.what()));
  }
}

FileDigest digest(const std::filesystem::path& path) {
  return {path.filename().string(), std::filesystem::file_size(path), sha256_file(path)};
}

}  // namespace

double parse_epsilon(std::string_view text) {
  text = trim(text);
  double eps;
  if (text.rfind("2^", 0) == 0) {
    eps = std::exp2(parse_real("epsilon", text.substr(2)));
  } else {
    eps = parse_real("epsilon", text);
  }
  if (!(eps > 0.0 && eps < 1.0)) config_fail("epsilon", text, "must lie in (0, 1)");
  return eps;
}

std::string format_epsilon(double epsilon) {
  const double k = -std::log2(epsilon);
  if (k == std::round(k)) return "2^-" + std::to_string(static_cast<long long>(k));
  return fmt(epsilon);
}

std::string_view mode_name(SourceMode mode) {
  switch (mode) {
    case SourceMode::single: return "single";
    case SourceMode::entangled: return "entangled";
    case SourceMode::adversarial: return "adversarial";
  }
  return "?";
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::simulate: return "simulate";
    case Stage::calibrate: return "calibrate";
    case Stage::certify: return "certify";
    case Stage::generate: return "generate";
    case Stage::extract: return "extract";
    case Stage::verify: return "verify";
    case Stage::test: return "test";
    case Stage::report: return "report";
  }
  return "?";
}

qubit::Decomposition parse_decomposition(std::string_view text) {
  std::vector<qubit::DecompositionTerm> terms;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto semi = text.find(';', start);
    const auto item = trim(text.substr(start, semi == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : semi - start));
    if (!item.empty()) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) {
        config_fail("decomposition", text, "terms look like w:s1/s2/s3");
      }
      std::string coords(item.substr(colon + 1));
      std::replace(coords.begin(), coords.end(), '/', ',');
      const double w = parse_real("decomposition", trim(item.substr(0, colon)));
      terms.push_back({w, qubit::PureState(parse_vec3("decomposition", coords))});
    }
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return qubit::Decomposition(std::move(terms));
}

void PipelineConfig::apply(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "mode") {
    if (value == "single") mode = SourceMode::single;
    else if (value == "entangled") mode = SourceMode::entangled;
    else if (value == "adversarial") mode = SourceMode::adversarial;
    else config_fail(key, value, "expected single, entangled or adversarial");
  } else if (key == "seed") {
    seed = parse_u64(key, value);
  } else if (key == "stokes") {
    stokes = parse_vec3(key, value);
  } else if (key == "phase") {
    phase = parse_real(key, value);
  } else if (key == "coherence") {
    coherence = parse_real(key, value);
  } else if (key == "accidental_fraction") {
    accidental_fraction = parse_real(key, value);
  } else if (key == "decomposition") {
    decomposition = std::string(value);
  } else if (key == "adversary_target") {
    adversary_target = parse_vec3(key, value);
  } else if (key == "calibration_events") {
    calibration_events = parse_u64(key, value);
  } else if (key == "alpha") {
    alpha = parse_real(key, value);
  } else if (key == "confidence") {
    const auto m = entropy::parse_method(value);
    if (!m) config_fail(key, value, "expected clopper_pearson, empirical_bernstein or hoeffding");
    confidence = *m;
  } else if (key == "count_floor") {
    count_floor = parse_u64(key, value);
  } else if (key == "generation_events") {
    if (value == "auto") generation_events.reset();
    else generation_events = parse_u64(key, value);
  } else if (key == "target_output_bits") {
    target_output_bits = parse_u64(key, value);
  } else if (key == "block_n") {
    block_n = parse_u64(key, value);
  } else if (key == "epsilon") {
    epsilon = parse_epsilon(value);
  } else if (key == "hash_seed") {
    if (value != "system" && value.rfind("file:", 0) != 0 && value.rfind("prng:", 0) != 0) {
      config_fail(key, value, "expected system, file:PATH or prng:N");
    }
    if (value.rfind("prng:", 0) == 0) parse_u64(key, value.substr(5));
    hash_seed = std::string(value);
  } else if (key == "tests") {
    if (value != "all" && value != "none") {
      std::string list(value);
      std::stringstream ss(list);
      std::string name;
      while (std::getline(ss, name, ',')) {
        const auto& known = known_tests();
        if (std::find(known.begin(), known.end(), std::string(trim(name))) == known.end()) {
          config_fail(key, value, "unknown test name");
        }
      }
    }
    tests = std::string(value);
  } else if (key == "recalibrate_every") {
    recalibrate_every = parse_u64(key, value);
  } else if (key == "write_generation_log") {
    write_generation_log = parse_bool(key, value);
  } else if (key == "threads") {
    threads = static_cast<unsigned>(parse_u64(key, value));
  } else if (key == "out") {
    if (value.empty()) config_fail(key, value, "empty output directory");
    out = std::filesystem::path(std::string(value));
  } else {
    fail(ErrorKind::config, "unknown config key '" + std::string(key) + "'");
  }
}

PipelineConfig PipelineConfig::parse(std::istream& is) {
  PipelineConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::config, "config line " + std::to_string(line_no) + " has no '='");
    }
    c.apply(trim(text.substr(0, eq)), text.substr(eq + 1));
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::io, "cannot open config '" + path.string() + "'");
  return parse(is);
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("mode", std::string(mode_name(mode)));
  e.emplace_back("seed", std::to_string(seed));
  switch (mode) {
    case SourceMode::single:
      e.emplace_back("stokes", fmt(stokes.x) + "," + fmt(stokes.y) + "," + fmt(stokes.z));
      e.emplace_back("phase", fmt(phase));
      break;
    case SourceMode::entangled:
      e.emplace_back("coherence", fmt(coherence));
      e.emplace_back("accidental_fraction", fmt(accidental_fraction));
      e.emplace_back("phase", fmt(phase));
      break;
    case SourceMode::adversarial:
      if (adversary_target) {
        e.emplace_back("adversary_target", fmt(adversary_target->x) + "," +
                                               fmt(adversary_target->y) + "," +
                                               fmt(adversary_target->z));
      } else {
        e.emplace_back("decomposition", decomposition);
      }
      break;
  }
  e.emplace_back("calibration_events", std::to_string(calibration_events));
  e.emplace_back("alpha", fmt(alpha));
  e.emplace_back("confidence", std::string(entropy::method_name(confidence)));
  e.emplace_back("count_floor", std::to_string(count_floor));
  e.emplace_back("generation_events",
                 generation_events ? std::to_string(*generation_events) : "auto");
  e.emplace_back("target_output_bits", std::to_string(target_output_bits));
  e.emplace_back("block_n", std::to_string(block_n));
  e.emplace_back("epsilon", format_epsilon(epsilon));
  e.emplace_back("hash_seed", hash_seed);
  e.emplace_back("tests", tests);
  e.emplace_back("recalibrate_every", std::to_string(recalibrate_every));
  e.emplace_back("write_generation_log", write_generation_log ? "1" : "0");
  e.emplace_back("threads", std::to_string(threads));
  e.emplace_back("out", out.string());
  return e;
}

void PipelineConfig::validate() const {
  if (calibration_events == 0) fail(ErrorKind::config, "calibration_events must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::config, "alpha must lie in (0, 1)");
  if (block_n == 0) fail(ErrorKind::config, "block_n must be positive");
  if (generation_events && *generation_events == 0) {
    fail(ErrorKind::config, "generation_events must be positive");
  }
  if (!generation_events && target_output_bits == 0) {
    fail(ErrorKind::config, "generation_events=auto needs target_output_bits");
  }
  if (mode == SourceMode::adversarial && !adversary_target && decomposition.empty()) {
    fail(ErrorKind::config, "adversarial mode needs decomposition or adversary_target");
  }
  try {
    source_model(seed).validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("source parameters: ") + e.what());
  }
}

source::SourceModel PipelineConfig::source_model(std::uint64_t run_seed) const {
  switch (mode) {
    case SourceMode::single:
      return {source::SinglePhoton{qubit::StokesVector(stokes), phase}, run_seed};
    case SourceMode::entangled:
      return {source::Entangled{coherence, accidental_fraction, phase}, run_seed};
    case SourceMode::adversarial: {
      if (adversary_target) {
        return {source::Adversarial{
                    qubit::optimal_decomposition(qubit::StokesVector(*adversary_target))},
                run_seed};
      }
      return {source::Adversarial{parse_decomposition(decomposition)}, run_seed};
    }
  }
  fail(ErrorKind::config, "unknown mode");
}

stats::BatteryConfig PipelineConfig::battery(std::size_t n_bits) const {
  if (tests == "none") return stats::BatteryConfig::none();
  auto cfg = stats::BatteryConfig::for_length(n_bits);
  if (tests == "all") return cfg;
  auto enabled = [&](const char* name) {
    std::stringstream ss(tests);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (trim(item) == name) return true;
    }
    return false;
  };
  cfg.monobit = enabled("monobit");
  cfg.block_frequency = enabled("block_frequency");
  cfg.runs = enabled("runs");
  cfg.longest_run = enabled("longest_run_of_ones");
  cfg.cumulative_sums = enabled("cumulative_sums");
  cfg.serial = enabled("serial");
  cfg.approximate_entropy = enabled("approximate_entropy");
  return cfg;
}

std::unique_ptr<extract::SeedProvider> PipelineConfig::seed_provider() const {
  if (hash_seed == "system") return std::make_unique<extract::SystemSeedProvider>();
  if (hash_seed.rfind("file:", 0) == 0) {
    return std::make_unique<extract::FileSeedProvider>(hash_seed.substr(5));
  }
  return std::make_unique<extract::PrngSeedProvider>(
      parse_u64("hash_seed", std::string_view(hash_seed).substr(5)));
}

std::uint64_t calibration_seed(std::uint64_t master, std::size_t round) {
  return derive_seed(master, 0x1000 + round);
}

std::uint64_t generation_seed(std::uint64_t master) { return derive_seed(master, 0x2000); }

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::insufficient_entropy: return 2;
    case ErrorKind::insufficient_data:
    case ErrorKind::empty_input: return 3;
    case ErrorKind::io: return 4;
    case ErrorKind::config:
    case ErrorKind::parameter:
    case ErrorKind::invalid_state:
    case ErrorKind::invalid_decomposition: return 5;
  }
  return 1;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::io, "SHA-256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = is.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

void RunReport::write(std::ostream& os) const {
  os << "# qrbg run report\n";
  os << "created=" << created_utc << "\n\n[config]\n";
  for (const auto& [k, v] : config) os << k << '=' << v << '\n';
  for (std::size_t i = 0; i < calibrations.size(); ++i) {
    os << "\n[tomography" << (i ? "." + std::to_string(i) : std::string()) << "]\n";
    tomography::write_state_report(os, calibrations[i]);
  }
  os << "\n[certification]\n";
  os << "calibrations=" << calibrations.size() << '\n';
  os << "certified_minentropy_rate=" << fmt(certified.bits_per_sample(), 12) << '\n';
  os << "note=the confidence bound on the certified rate is added here; it is not part of "
        "the closed-form worst-case min-entropy\n";
  os << "\n[extraction]\n";
  os << "raw_bits=" << raw_bits << '\n'
     << "block_n=" << block_n << '\n'
     << "block_m=" << block_m << '\n'
     << "epsilon=" << format_epsilon(epsilon) << '\n'
     << "blocks=" << blocks << '\n'
     << "output_bits=" << output_bits << '\n'
     << "discarded_bits=" << discarded_bits << '\n'
     << "ratio=" << fmt(ratio(), 10) << '\n'
     << "seed_source=" << seed_source << '\n';
  os << "\n[tests]\n";
  os << "note=statistical tests only check that the generator is implemented correctly; "
        "the certified min-entropy carries the security claim\n";
  stats::write_test_report(os, tests);
  os << "pass_proportion=" << fmt(stats::pass_proportion(tests), 6) << '\n';
  os << "\n[files]\n";
  for (const auto& f : files) {
    os << "file=" << f.name << " bytes=" << f.bytes << " sha256=" << f.sha256 << '\n';
  }
}

std::pair<std::filesystem::path, std::filesystem::path> simulate(const PipelineConfig& config,
                                                                  std::size_t generation_events) {
  return in_stage(Stage::simulate, [&] {
    std::filesystem::create_directories(config.out);
    const auto calib_path = config.out / "calibration.log";
    const auto gen_path = config.out / "generation.log";
    const auto calib = source::sample_events(
        config.source_model(calibration_seed(config.seed, 0)),
        source::BasisSchedule::blocked(config.calibration_events), config.calibration_events);
    source::write_event_log(calib_path, calib);
    const auto gen = source::sample_events(
        config.source_model(generation_seed(config.seed)),
        source::BasisSchedule::constant(source::Basis::Z, generation_events), generation_events);
    source::write_event_log(gen_path, gen);
    return std::pair{calib_path, gen_path};
  });
}

RunReport run(const PipelineConfig& config, std::optional<std::filesystem::path> report_path) {
  in_stage(Stage::simulate, [&] { config.validate(); });
  RunReport report;
  report.created_utc = utc_now();
  report.config = config.echo();
  report.block_n = config.block_n;
  report.epsilon = config.epsilon;

  in_stage(Stage::simulate, [&] { std::filesystem::create_directories(config.out); });
  std::vector<std::filesystem::path> written;
  std::vector<std::uint64_t> calib_seeds;

  auto calibrate_round = [&](std::size_t round) {
    const std::uint64_t seed = calibration_seed(config.seed, round);
    const auto path = config.out / (round == 0 ? std::string("calibration.log")
                                               : "calibration." + std::to_string(round) + ".log");
    in_stage(Stage::simulate, [&] {
      const auto log = source::sample_events(
          config.source_model(seed), source::BasisSchedule::blocked(config.calibration_events),
          config.calibration_events);
      source::write_event_log(path, log);
    });
    calib_seeds.push_back(seed);
    written.push_back(path);
    // Tomography sees only the calibration file.
    report.calibrations.push_back(in_stage(Stage::calibrate, [&] {
      return tomography::reconstruct(source::read_event_log(path), config.alpha,
                                     config.confidence, config.count_floor);
    }));
  };

  auto min_rate = [&] {
    entropy::EntropyRate r(1.0);
    for (const auto& c : report.calibrations) r = std::min(r, c.rate);
    return r;
  };
  auto auto_events = [&](const extract::ExtractorParams& p) {
    const std::size_t m = static_cast<std::size_t>(p.m);
    const std::size_t blocks = (config.target_output_bits + m - 1) / m;
    return std::max<std::size_t>(1, blocks) * config.block_n;
  };

  calibrate_round(0);
  auto params = in_stage(Stage::certify, [&] {
    return extract::ExtractorParams::make(min_rate(), config.block_n, config.epsilon);
  });
  std::size_t gen_events =
      config.generation_events ? *config.generation_events : auto_events(params);
  if (config.recalibrate_every > 0) {
    const std::size_t rounds = 1 + (gen_events - 1) / config.recalibrate_every;
    for (std::size_t r = 1; r < rounds; ++r) calibrate_round(r);
    params = in_stage(Stage::certify, [&] {
      return extract::ExtractorParams::make(min_rate(), config.block_n, config.epsilon);
    });
    if (!config.generation_events) gen_events = auto_events(params);
  }
  report.certified = params.h_rate;
  report.block_m = params.m;

  const std::uint64_t gen_seed = generation_seed(config.seed);
  if (std::find(calib_seeds.begin(), calib_seeds.end(), gen_seed) != calib_seeds.end()) {
    throw StageError(Stage::generate,
                     Error(ErrorKind::config, "generation stream shares a calibration seed"));
  }
  const auto raw_path = config.out / "generation.bits";
  in_stage(Stage::generate, [&] {
    const auto model = config.source_model(gen_seed);
    const BitStream raw = source::sample_raw_bits(model, gen_events);
    BitFileHeader h;
    h.set("role", "raw");
    h.set("source", model.describe());
    h.set("seed", std::to_string(gen_seed));
    h.set("rng", SimRng::kName);
    write_bit_file(raw_path, h, raw);
    if (config.write_generation_log) {
      const auto log = source::sample_events(
          model, source::BasisSchedule::constant(source::Basis::Z, gen_events), gen_events);
      source::write_event_log(config.out / "generation.log", log);
      written.push_back(config.out / "generation.log");
    }
  });
  written.push_back(raw_path);
  report.raw_bits = gen_events;

  const auto out_path = config.out / "extracted.bits";
  in_stage(Stage::extract, [&] {
    const BitFile raw = read_bit_file(raw_path);
    auto provider = config.seed_provider();
    const auto result = extract::extract_stream(raw.bits, params, *provider, config.threads);
    write_bit_file(out_path, result.header(), result.output);
    report.blocks = result.blocks;
    report.discarded_bits = result.discarded_bits;
    report.seed_source = result.seed_provenance;
  });
  written.push_back(out_path);

  const BitFile extracted = in_stage(Stage::verify, [&] {
    BitFile f = read_bit_file(out_path);
    const std::size_t expected = report.blocks * static_cast<std::size_t>(report.block_m);
    if (f.bits.size() != expected || f.header.require("blocks") != std::to_string(report.blocks) ||
        f.header.require("block_m") != std::to_string(report.block_m)) {
      fail(ErrorKind::io, "extracted file accounting mismatch: " +
                              std::to_string(f.bits.size()) + " bits, expected " +
                              std::to_string(expected));
    }
    return f;
  });
  report.output_bits = extracted.bits.size();

  in_stage(Stage::test, [&] {
    if (config.tests == "none") return;
    if (extracted.bits.empty()) {
      fail(ErrorKind::insufficient_data, "no extracted bits to test");
    }
    report.tests = stats::run_battery(extracted.bits, config.battery(extracted.bits.size()));
  });

  in_stage(Stage::report, [&] {
    for (const auto& p : written) report.files.push_back(digest(p));
    const auto path = report_path.value_or(config.out / "report.txt");
    std::ofstream os(path, std::ios::trunc);
    if (!os) fail(ErrorKind::io, "cannot write report '" + path.string() + "'");
    report.write(os);
    if (!os) fail(ErrorKind::io, "failed writing report '" + path.string() + "'");
  });
  return report;
}

}  // namespace qrbg::pipeline
