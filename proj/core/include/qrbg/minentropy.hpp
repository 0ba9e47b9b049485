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

// Min-entropy of qubit measurement records as seen by an adversary who
// controls the source: per-state, per-decomposition, and the worst case
// over all decompositions of a density matrix.

#include <cstddef>
#include <optional>
#include <string_view>

#include "qrbg/qubit.hpp"

namespace qrbg::entropy {

/// Min-entropy per raw binary sample, in [0, 1].
class EntropyRate {
 public:
  constexpr EntropyRate() = default;
  explicit EntropyRate(double bits_per_sample);

  constexpr double bits_per_sample() const { return bits_; }
  friend constexpr auto operator<=>(const EntropyRate&, const EntropyRate&) = default;

 private:
  double bits_ = 0.0;
};

/// -log2(max(P0, P1)) for a computational-basis measurement of psi.
EntropyRate minentropy_pure(const qubit::PureState& psi);

/// Sum_i p_i * minentropy_pure(psi_i): the entropy left when the adversary
/// knows which term of the mixture was sent each time.
EntropyRate minentropy_decomposition(const qubit::Decomposition& d);

/// f(c) = -log2((1 + sqrt(1 - c^2)) / 2) for coherence radius c in [0, 1].
double f_of_coherence(double c);

/// f evaluated on a density matrix; depends only on |S1 - i S2|.
EntropyRate f_rho(const qubit::DensityMatrix& rho);
EntropyRate f_rho(const qubit::StokesVector& s);

/// Worst-case min-entropy over every decomposition of rho. Equal to f_rho;
/// the separate name documents intent at call sites.
EntropyRate worst_case_minentropy(const qubit::DensityMatrix& rho);

/// Brute-force minimum of minentropy_decomposition over two-term
/// decompositions of rho.
///
/// Every two-term decomposition is a chord of the Bloch ball through rho's
/// point with both ends on the sphere. The chords are enumerated over
/// `directions` unit directions on a polar/azimuthal grid of the upper
/// hemisphere (the pole included); the ends are found by intersecting with
/// the sphere and the weights follow from the lever rule. Restricting to
/// chords loses nothing: the entropy of a k-term decomposition is a convex
/// combination of chord entropies. Independent of the closed form f.
///
/// States on the sphere surface have only the trivial decomposition and
/// return minentropy_pure directly. Requires directions >= 8.
EntropyRate oracle_min_over_decompositions(const qubit::DensityMatrix& rho,
                                           std::size_t directions);

enum class ConfidenceMethod {
  /// Exact one-sided binomial (Clopper-Pearson) limit on each outcome
  /// probability. Tightest of the three, and the only one that stays useful
  /// next to c = 1, where f has unbounded slope.
  clopper_pearson,
  /// Maurer-Pontil empirical Bernstein; variance from the estimate itself.
  empirical_bernstein,
  /// Distribution-free Hoeffding, delta = sqrt(2 ln(4/alpha) / n).
  hoeffding,
};

std::string_view method_name(ConfidenceMethod m);
std::optional<ConfidenceMethod> parse_method(std::string_view name);

/// How far |s| may shrink towards zero for one coherence component (s1 or
/// s2), a +-1 valued mean estimated from n samples, at error alpha / 4 per
/// tail.
double stokes_deviation(double s_hat, std::size_t n, double alpha,
                        ConfidenceMethod method);

/// Conservative min-entropy rate from an estimated Stokes vector.
///
/// The coherence is deflated, never inflated: c_low = max(0, c_hat - d)
/// where d = d1 |u1| + d2 |u2| bounds the error of the estimate projected on
/// its own direction u = (s1, s2) / c_hat. With probability at least
/// 1 - alpha the true state has coherence >= c_low, so f(c_low) is a lower
/// bound on the true worst-case rate.
EntropyRate lower_confidence_rate(
    const qubit::StokesVector& s_hat, std::size_t n_per_basis, double alpha,
    ConfidenceMethod method = ConfidenceMethod::clopper_pearson);

}  // namespace qrbg::entropy
