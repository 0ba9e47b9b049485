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

#include "qrbg/source_sim.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "qrbg/error.hpp"
#include "qrbg/rng.hpp"

namespace qrbg::source {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_unit_interval(double v, const char* name, bool open_top) {
  if (!(v >= 0.0) || v > 1.0 || (open_top && v >= 1.0)) {
    fail(ErrorKind::parameter, std::string(name) + " out of range");
  }
}

// P(outcome 0) for a Bloch vector measured along `axis`.
double prob_zero(const qubit::Vec3& s, Basis b) {
  return 0.5 * (1.0 + s.dot(basis_axis(b)));
}

// Shared event loop. Sink receives (index, basis, outcome, label-or-(-1)).
template <class Sink>
void run_source(const SourceModel& m, const BasisSchedule& schedule, std::size_t n,
                Sink&& sink) {
  m.validate();
  SimRng rng(m.rng_seed);
  if (const auto* adv = std::get_if<Adversarial>(&m.variant)) {
    const auto terms = adv->decomposition.terms();
    std::vector<double> cumulative;
    cumulative.reserve(terms.size());
    double acc = 0.0;
    for (const auto& t : terms) cumulative.push_back(acc += t.weight);
    std::array<std::vector<double>, 3> p0;
    for (Basis b : {Basis::Z, Basis::X, Basis::Y}) {
      for (const auto& t : terms) {
        p0[static_cast<int>(b)].push_back(prob_zero(t.state.bloch().vec(), b));
      }
    }
    const std::size_t last = terms.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const Basis b = schedule.at(i);
      const double u_label = rng.uniform() * acc;
      std::size_t label = 0;
      while (label < last && u_label >= cumulative[label]) ++label;
      const bool one = rng.uniform() >= p0[static_cast<int>(b)][label];
      sink(i, b, one, static_cast<long long>(label));
    }
    return;
  }
  const qubit::Vec3 s = model_state(m).vec();
  const std::array<double, 3> p0 = {prob_zero(s, Basis::Z), prob_zero(s, Basis::X),
                                    prob_zero(s, Basis::Y)};
  for (std::size_t i = 0; i < n; ++i) {
    const Basis b = schedule.at(i);
    sink(i, b, rng.uniform() >= p0[static_cast<int>(b)], -1LL);
  }
}

template <class T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::io, std::string("event log: bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

char basis_char(Basis b) {
  switch (b) {
    case Basis::Z: return 'Z';
    case Basis::X: return 'X';
    case Basis::Y: return 'Y';
  }
  return '?';
}

Basis basis_from_char(char c) {
  switch (c) {
    case 'Z': return Basis::Z;
    case 'X': return Basis::X;
    case 'Y': return Basis::Y;
    default: fail(ErrorKind::parameter, std::string("unknown basis '") + c + "'");
  }
}

qubit::Vec3 basis_axis(Basis b) {
  switch (b) {
    case Basis::Z: return {0.0, 0.0, 1.0};
    case Basis::X: return {1.0, 0.0, 0.0};
    case Basis::Y: return {0.0, 1.0, 0.0};
  }
  return {};
}

BasisSchedule BasisSchedule::constant(Basis b, std::size_t n) {
  BasisSchedule s;
  s.kind_ = Kind::constant;
  s.fixed_ = b;
  s.size_ = n;
  return s;
}

BasisSchedule BasisSchedule::blocked(std::size_t n) {
  BasisSchedule s;
  s.kind_ = Kind::blocked;
  s.size_ = n;
  const std::size_t third = n / 3;
  const std::size_t extra = n % 3;
  s.block_end_[0] = third + (extra > 0 ? 1 : 0);
  s.block_end_[1] = s.block_end_[0] + third + (extra > 1 ? 1 : 0);
  return s;
}

BasisSchedule BasisSchedule::round_robin(std::size_t n) {
  BasisSchedule s;
  s.kind_ = Kind::round_robin;
  s.size_ = n;
  return s;
}

BasisSchedule BasisSchedule::explicit_list(std::vector<Basis> bases) {
  BasisSchedule s;
  s.kind_ = Kind::list;
  s.size_ = bases.size();
  s.list_ = std::move(bases);
  return s;
}

Basis BasisSchedule::at(std::size_t i) const {
  switch (kind_) {
    case Kind::constant: return fixed_;
    case Kind::blocked:
      return i < block_end_[0] ? Basis::Z : (i < block_end_[1] ? Basis::X : Basis::Y);
    case Kind::round_robin: {
      constexpr Basis order[3] = {Basis::Z, Basis::X, Basis::Y};
      return order[i % 3];
    }
    case Kind::list: return list_[i];
  }
  return Basis::Z;
}

void SourceModel::validate() const {
  std::visit(overloaded{
                 [](const SinglePhoton& sp) {
                   if (!std::isfinite(sp.birefringence_phase)) {
                     fail(ErrorKind::parameter, "birefringence phase must be finite");
                   }
                 },
                 [](const Entangled& e) {
                   check_unit_interval(e.coherence, "coherence", false);
                   check_unit_interval(e.accidental_fraction, "accidental_fraction", true);
                   if (!std::isfinite(e.birefringence_phase)) {
                     fail(ErrorKind::parameter, "birefringence phase must be finite");
                   }
                 },
                 [](const Adversarial&) {},
             },
             variant);
}

std::string SourceModel::describe() const {
  return std::visit(
      overloaded{
          [](const SinglePhoton& sp) {
            return "single_photon(s1=" + fmt_double(sp.state.s1()) +
                   ",s2=" + fmt_double(sp.state.s2()) + ",s3=" + fmt_double(sp.state.s3()) +
                   ",phase=" + fmt_double(sp.birefringence_phase) + ")";
          },
          [](const Entangled& e) {
            return "entangled(coherence=" + fmt_double(e.coherence) +
                   ",accidental_fraction=" + fmt_double(e.accidental_fraction) +
                   ",phase=" + fmt_double(e.birefringence_phase) + ")";
          },
          [](const Adversarial& a) {
            std::string out = "adversarial(";
            for (std::size_t i = 0; i < a.decomposition.size(); ++i) {
              const auto& t = a.decomposition[i];
              if (i) out += ";";
              out += fmt_double(t.weight) + ":" + fmt_double(t.state.bloch().s1()) + "/" +
                     fmt_double(t.state.bloch().s2()) + "/" +
                     fmt_double(t.state.bloch().s3());
            }
            return out + ")";
          },
      },
      variant);
}

qubit::StokesVector apply_birefringence(const qubit::StokesVector& s, double phase) {
  const double c = std::cos(phase);
  const double sn = std::sin(phase);
  return qubit::StokesVector(c * s.s1() - sn * s.s2(), sn * s.s1() + c * s.s2(), s.s3());
}

qubit::DensityMatrix effective_qubit(double coherence, double accidental_fraction) {
  check_unit_interval(coherence, "coherence", false);
  check_unit_interval(accidental_fraction, "accidental_fraction", true);
  using C = std::complex<double>;
  // Two-photon basis order: H1H2, H1V2, V1H2, V1V2.
  constexpr int kHV = 1;
  constexpr int kVH = 2;
  std::array<std::array<C, 4>, 4> rho{};
  const double signal = 1.0 - accidental_fraction;
  rho[kHV][kHV] += signal * 0.5;
  rho[kVH][kVH] += signal * 0.5;
  rho[kHV][kVH] += signal * 0.5 * coherence;
  rho[kVH][kHV] += signal * 0.5 * coherence;
  // Accidental coincidences: uncorrelated pairs, registered only in the
  // coincidence block, with no coherence between its two states.
  rho[kHV][kHV] += accidental_fraction * 0.5;
  rho[kVH][kVH] += accidental_fraction * 0.5;

  const C norm = rho[kHV][kHV] + rho[kVH][kVH];
  return qubit::DensityMatrix::from_entries(rho[kHV][kHV] / norm, rho[kHV][kVH] / norm,
                                            rho[kVH][kHV] / norm, rho[kVH][kVH] / norm);
}

qubit::StokesVector model_state(const SourceModel& m) {
  return std::visit(
      overloaded{
          [](const SinglePhoton& sp) {
            return apply_birefringence(sp.state, sp.birefringence_phase);
          },
          [](const Entangled& e) {
            return apply_birefringence(
                qubit::density_to_stokes(effective_qubit(e.coherence, e.accidental_fraction)),
                e.birefringence_phase);
          },
          [](const Adversarial& a) { return qubit::mix_bloch(a.decomposition); },
      },
      m.variant);
}

EventLog sample_events(const SourceModel& m, const BasisSchedule& schedule, std::size_t n) {
  if (n == 0) fail(ErrorKind::parameter, "need at least one event");
  if (schedule.size() != n) {
    fail(ErrorKind::parameter, "basis schedule length differs from event count");
  }
  EventLog log;
  log.source = m.describe();
  log.rng_seed = m.rng_seed;
  log.records.reserve(n);
  run_source(m, schedule, n, [&](std::size_t i, Basis b, bool one, long long label) {
    EventRecord r;
    r.index = i;
    r.basis = b;
    r.outcome = one ? 1 : 0;
    if (label >= 0) r.eve_label = static_cast<std::uint32_t>(label);
    log.records.push_back(r);
  });
  return log;
}

EventLog sample_coincidences(double coherence, double accidental_fraction,
                             const BasisSchedule& schedule, std::size_t n,
                             std::uint64_t seed) {
  SourceModel m{Entangled{coherence, accidental_fraction, 0.0}, seed};
  return sample_events(m, schedule, n);
}

BitStream sample_raw_bits(const SourceModel& m, std::size_t n) {
  if (n == 0) fail(ErrorKind::parameter, "need at least one event");
  BitStream bits(n);
  run_source(m, BasisSchedule::constant(Basis::Z, n), n,
             [&](std::size_t i, Basis, bool one, long long) {
               if (one) bits.set(i, true);
             });
  return bits;
}

BitStream generation_bits(const EventLog& log) {
  BitStream bits(log.size());
  for (const auto& r : log.records) {
    if (r.basis != Basis::Z) {
      fail(ErrorKind::parameter, "generation log contains non-Z events");
    }
    if (r.outcome) bits.set(r.index, true);
  }
  return bits;
}

double empirical_eve_minentropy(const EventLog& log) {
  if (log.records.empty()) fail(ErrorKind::empty_input, "empty event log");
  std::unordered_map<std::uint32_t, std::array<std::size_t, 2>> counts;
  for (const auto& r : log.records) {
    if (!r.eve_label) fail(ErrorKind::parameter, "event without adversary label");
    if (r.basis != Basis::Z) fail(ErrorKind::parameter, "non-Z event in generation log");
    ++counts[*r.eve_label][r.outcome];
  }
  double total = 0.0;
  for (const auto& [label, c] : counts) {
    const double n_label = static_cast<double>(c[0] + c[1]);
    const double guess = static_cast<double>(std::max(c[0], c[1])) / n_label;
    total += n_label * -std::log2(guess);
  }
  return total / static_cast<double>(log.records.size());
}

void write_event_log(std::ostream& os, const EventLog& log) {
  os << "# source=" << log.source << '\n';
  os << "# seed=" << log.rng_seed << '\n';
  os << "# rng=" << SimRng::kName << '\n';
  os << "# n=" << log.records.size() << '\n';
  std::string buf;
  buf.reserve(1 << 16);
  char num[24];
  for (const auto& r : log.records) {
    auto [end, ec] = std::to_chars(num, num + sizeof num, r.index);
    buf.append(num, end);
    buf.push_back(',');
    buf.push_back(basis_char(r.basis));
    buf.push_back(',');
    buf.push_back(static_cast<char>('0' + r.outcome));
    if (r.eve_label) {
      buf.push_back(',');
      auto [lend, lec] = std::to_chars(num, num + sizeof num, *r.eve_label);
      buf.append(num, lend);
    }
    buf.push_back('\n');
    if (buf.size() > (1 << 16) - 64) {
      os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) fail(ErrorKind::io, "failed writing event log");
}

void write_event_log(const std::filesystem::path& path, const EventLog& log) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  write_event_log(os, log);
  os.flush();
  if (!os) fail(ErrorKind::io, "failed writing '" + path.string() + "'");
}

EventLog read_event_log(std::istream& is) {
  EventLog log;
  std::optional<std::size_t> declared_n;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string_view key(line.data() + 1, eq - 1);
      while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
      const std::string_view value(line.data() + eq + 1, line.size() - eq - 1);
      if (key == "source") log.source = std::string(value);
      else if (key == "seed") log.rng_seed = parse_number<std::uint64_t>(value, "seed");
      else if (key == "n") declared_n = parse_number<std::size_t>(value, "n");
      continue;
    }
    std::string_view rest(line);
    const auto c1 = rest.find(',');
    if (c1 == std::string_view::npos || c1 + 4 > rest.size() || rest[c1 + 2] != ',') {
      fail(ErrorKind::io, "event log: malformed record '" + line + "'");
    }
    EventRecord r;
    r.index = parse_number<std::uint64_t>(rest.substr(0, c1), "index");
    if (r.index != log.records.size()) {
      fail(ErrorKind::io, "event log: indices are not consecutive from 0");
    }
    r.basis = basis_from_char(rest[c1 + 1]);
    const char outcome = rest[c1 + 3];
    if (outcome != '0' && outcome != '1') fail(ErrorKind::io, "event log: outcome not a bit");
    r.outcome = static_cast<std::uint8_t>(outcome - '0');
    if (c1 + 4 < rest.size()) {
      if (rest[c1 + 4] != ',') fail(ErrorKind::io, "event log: malformed record '" + line + "'");
      r.eve_label = parse_number<std::uint32_t>(rest.substr(c1 + 5), "eve_label");
    }
    log.records.push_back(r);
  }
  if (declared_n && *declared_n != log.records.size()) {
    fail(ErrorKind::io, "event log: header n differs from record count");
  }
  return log;
}

EventLog read_event_log(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_event_log(is);
}

}  // namespace qrbg::source
