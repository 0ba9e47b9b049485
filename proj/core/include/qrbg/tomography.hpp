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

// Off-line state tomography of the measured qubit: tally outcomes per
// basis, invert linearly to Stokes parameters, project onto the Poincare
// sphere, and certify a conservative min-entropy rate.

#include <array>
#include <cstddef>
#include <iosfwd>

#include "qrbg/minentropy.hpp"
#include "qrbg/qubit.hpp"
#include "qrbg/source_sim.hpp"

namespace qrbg::tomography {

/// Minimum outcomes per basis before estimate_stokes will run.
inline constexpr std::size_t kDefaultCountFloor = 100;

struct BasisCounts {
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  std::size_t total() const { return n0 + n1; }
};

struct CountTable {
  std::array<BasisCounts, 3> by_basis{};  // indexed by source::Basis

  BasisCounts& operator[](source::Basis b) { return by_basis[static_cast<int>(b)]; }
  const BasisCounts& operator[](source::Basis b) const {
    return by_basis[static_cast<int>(b)];
  }
  std::size_t total() const;
};

struct TomographyResult {
  qubit::StokesVector s_hat;  // after projection
  qubit::Vec3 s_raw;          // linear inversion, may be non-physical
  std::array<double, 3> std_error{};
  std::size_t n_per_basis = 0;  // smallest per-basis count
  bool projected = false;
};

struct Certification {
  TomographyResult tomography;
  entropy::EntropyRate rate;
  double alpha = 0.0;
  entropy::ConfidenceMethod method = entropy::ConfidenceMethod::clopper_pearson;
};

CountTable tally(const source::EventLog& log);

/// Linear inversion (X -> s1, Y -> s2, Z -> s3), then radial projection
/// when the raw vector leaves the sphere. For a qubit the radial scaling is
/// the nearest physical state and only ever lowers the coherence.
TomographyResult estimate_stokes(const CountTable& counts,
                                 std::size_t count_floor = kDefaultCountFloor);

/// tally -> estimate_stokes -> lower_confidence_rate at the smallest
/// per-basis count.
Certification reconstruct(
    const source::EventLog& log, double alpha,
    entropy::ConfidenceMethod method = entropy::ConfidenceMethod::clopper_pearson,
    std::size_t count_floor = kDefaultCountFloor);

/// `key=value` lines: s1 s2 s3 stderr1 stderr2 stderr3 projected
/// minentropy_rate alpha (plus n_per_basis and bound).
void write_state_report(std::ostream& os, const Certification& c);

}  // namespace qrbg::tomography
