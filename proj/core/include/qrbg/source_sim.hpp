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

// Seeded simulation of polarization-qubit sources: a single-photon source,
// the post-selected entangled-pair source, and an adversary who prepares
// each photon from a decomposition of her choice and remembers which term
// she sent.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qrbg/bitstream.hpp"
#include "qrbg/qubit.hpp"

namespace qrbg::source {

enum class Basis : std::uint8_t { Z, X, Y };

char basis_char(Basis b);
Basis basis_from_char(char c);
/// Measurement axis on the Bloch sphere: Z=(0,0,1), X=(1,0,0), Y=(0,1,0).
qubit::Vec3 basis_axis(Basis b);

/// Basis assignment for every event of a run.
class BasisSchedule {
 public:
  static BasisSchedule constant(Basis b, std::size_t n);
  /// Equal thirds Z, X, Y in that order; the first n % 3 blocks get one
  /// extra event.
  static BasisSchedule blocked(std::size_t n);
  static BasisSchedule round_robin(std::size_t n);
  static BasisSchedule explicit_list(std::vector<Basis> bases);

  std::size_t size() const { return size_; }
  Basis at(std::size_t i) const;
  bool is_constant_z() const { return kind_ == Kind::constant && fixed_ == Basis::Z; }

 private:
  enum class Kind { constant, blocked, round_robin, list };
  Kind kind_ = Kind::constant;
  Basis fixed_ = Basis::Z;
  std::size_t size_ = 0;
  std::size_t block_end_[2] = {0, 0};
  std::vector<Basis> list_;
};

struct SinglePhoton {
  qubit::StokesVector state;
  /// Rotation of (s1, s2) applied in the fiber; leaves |S1 - i S2| fixed.
  double birefringence_phase = 0.0;
};

struct Entangled {
  double coherence = 1.0;
  double accidental_fraction = 0.0;
  double birefringence_phase = 0.0;
};

struct Adversarial {
  qubit::Decomposition decomposition;
};

using SourceVariant = std::variant<SinglePhoton, Entangled, Adversarial>;

struct SourceModel {
  SourceVariant variant;
  std::uint64_t rng_seed = 0;

  /// Validates parameter ranges; throws parameter errors.
  void validate() const;
  /// One-line description used in log and report headers.
  std::string describe() const;
  bool is_adversarial() const { return std::holds_alternative<Adversarial>(variant); }
};

struct EventRecord {
  std::uint64_t index = 0;
  Basis basis = Basis::Z;
  std::uint8_t outcome = 0;  // 0: H-type click, 1: V-type click
  std::optional<std::uint32_t> eve_label;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EventLog {
  std::string source;
  std::uint64_t rng_seed = 0;
  std::vector<EventRecord> records;

  std::size_t size() const { return records.size(); }
  friend bool operator==(const EventLog&, const EventLog&) = default;
};

/// Rotates (s1, s2) by `phase` radians.
qubit::StokesVector apply_birefringence(const qubit::StokesVector& s, double phase);

/// Effective qubit of the entangled source after coincidence post-selection.
///
/// Builds the two-photon state (|H1V2> + |V1H2>)/sqrt(2) with its
/// coincidence coherence scaled by `coherence`, mixes in an incoherent
/// accidental background that makes up `accidental_fraction` of the
/// registered coincidences, then keeps only the {|H1V2>, |V1H2>} block
/// (0 for H1-V2, 1 for V1-H2) and renormalizes. The Bloch vector is
/// (coherence * (1 - accidental_fraction), 0, 0).
qubit::DensityMatrix effective_qubit(double coherence, double accidental_fraction);

/// Bloch vector each event is drawn from, for non-adversarial models.
qubit::StokesVector model_state(const SourceModel& m);

/// Draws n events by the Born rule. Identical inputs give identical logs.
EventLog sample_events(const SourceModel& m, const BasisSchedule& schedule, std::size_t n);

/// The entangled pipeline: sample_events on effective_qubit. Accidentals
/// enter before post-selection; nothing downstream removes them.
EventLog sample_coincidences(double coherence, double accidental_fraction,
                             const BasisSchedule& schedule, std::size_t n,
                             std::uint64_t seed);

/// Computational-basis outcomes packed as raw bits, for generation runs
/// too large to keep per-event records. Consumes the generator exactly as
/// sample_events does with a constant-Z schedule, so the bits equal that
/// log's outcomes.
BitStream sample_raw_bits(const SourceModel& m, std::size_t n);

/// Z-basis outcomes of a log in event order. Throws if the log holds any
/// other basis.
BitStream generation_bits(const EventLog& log);

/// Adversary's empirical per-event min-entropy: the average over events of
/// -log2(max_b Pr[outcome = b | eve_label]), the conditional frequencies
/// estimated from the log itself. Requires labelled Z-basis events.
double empirical_eve_minentropy(const EventLog& log);

void write_event_log(std::ostream& os, const EventLog& log);
void write_event_log(const std::filesystem::path& path, const EventLog& log);
EventLog read_event_log(std::istream& is);
EventLog read_event_log(const std::filesystem::path& path);

}  // namespace qrbg::source
