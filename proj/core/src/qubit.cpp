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

#include "qrbg/qubit.hpp"

#include <algorithm>
#include <sstream>

#include "qrbg/error.hpp"

namespace qrbg::qubit {
namespace {

std::string describe(const Vec3& v) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
  return os.str();
}

}  // namespace

StokesVector::StokesVector(double s1, double s2, double s3) : v_{s1, s2, s3} {
  if (!std::isfinite(s1) || !std::isfinite(s2) || !std::isfinite(s3)) {
    fail(ErrorKind::invalid_state, "non-finite Stokes vector");
  }
  const double len = v_.norm();
  if (len > 1.0 + kStateTolerance) {
    fail(ErrorKind::invalid_state,
         "Stokes vector " + describe(v_) + " lies outside the Poincare sphere");
  }
  if (len > 1.0) v_ = (1.0 / len) * v_;
}

DensityMatrix DensityMatrix::from_entries(Complex e00, Complex e01,
                                          Complex e10, Complex e11) {
  if (std::abs(e10 - std::conj(e01)) > kStateTolerance ||
      std::abs(e00.imag()) > kStateTolerance ||
      std::abs(e11.imag()) > kStateTolerance) {
    fail(ErrorKind::invalid_state, "density matrix is not Hermitian");
  }
  if (std::abs(e00.real() + e11.real() - 1.0) > kStateTolerance) {
    fail(ErrorKind::invalid_state, "density matrix trace differs from 1");
  }
  const double det = e00.real() * e11.real() - std::norm(e01);
  if (det < -kStateTolerance || e00.real() < -kStateTolerance ||
      e11.real() < -kStateTolerance) {
    fail(ErrorKind::invalid_state, "density matrix is not positive semidefinite");
  }
  DensityMatrix rho;
  rho.e_ = {Complex(e00.real(), 0.0), e01, std::conj(e01),
            Complex(e11.real(), 0.0)};
  return rho;
}

std::pair<double, double> DensityMatrix::eigenvalues() const {
  const double a = e_[0].real();
  const double d = e_[3].real();
  const double half_gap = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(e_[1]));
  const double mean = 0.5 * (a + d);
  return {mean - half_gap, mean + half_gap};
}

PureState::PureState(const Vec3& bloch) {
  const double len = bloch.norm();
  if (!(std::abs(len - 1.0) <= kPureTolerance)) {
    fail(ErrorKind::invalid_state,
         "pure state needs a unit Bloch vector, got " + describe(bloch));
  }
  bloch_ = StokesVector((1.0 / len) * bloch);
}

Decomposition::Decomposition(std::vector<DecompositionTerm> terms)
    : terms_(std::move(terms)) {
  if (terms_.empty()) {
    fail(ErrorKind::invalid_decomposition, "decomposition has no terms");
  }
  double total = 0.0;
  for (const auto& t : terms_) {
    if (!(t.weight >= -kStateTolerance)) {
      fail(ErrorKind::invalid_decomposition, "negative decomposition weight");
    }
    total += t.weight;
  }
  if (std::abs(total - 1.0) > kStateTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "decomposition weights sum to " << total << ", not 1";
    fail(ErrorKind::invalid_decomposition, os.str());
  }
}

DensityMatrix stokes_to_density(const StokesVector& s) {
  using C = DensityMatrix::Complex;
  DensityMatrix rho;
  rho.e_ = {C(0.5 * (1.0 + s.s3()), 0.0), C(0.5 * s.s1(), -0.5 * s.s2()),
            C(0.5 * s.s1(), 0.5 * s.s2()), C(0.5 * (1.0 - s.s3()), 0.0)};
  return rho;
}

DensityMatrix stokes_to_density(const Vec3& s) {
  return stokes_to_density(StokesVector(s));
}

StokesVector density_to_stokes(const DensityMatrix& rho) {
  const auto off = rho.entry(0, 1);
  return StokesVector(2.0 * off.real(), -2.0 * off.imag(),
                      rho.entry(0, 0).real() - rho.entry(1, 1).real());
}

BornProbabilities born_probabilities(const DensityMatrix& rho) {
  const double p0 = std::clamp(rho.entry(0, 0).real(), 0.0, 1.0);
  return {p0, 1.0 - p0};
}

StokesVector mix_bloch(const Decomposition& d) {
  Vec3 acc;
  for (const auto& t : d.terms()) acc = acc + t.weight * t.state.bloch().vec();
  return StokesVector(acc);
}

DensityMatrix mix(const Decomposition& d) {
  return stokes_to_density(mix_bloch(d));
}

Decomposition optimal_decomposition(const StokesVector& s) {
  const double transverse = s.s1() * s.s1() + s.s2() * s.s2();
  const double s3p = std::sqrt(std::max(0.0, 1.0 - transverse));
  if (s3p <= kStateTolerance) {
    if (std::abs(s.s3()) > kPureTolerance) {
      fail(ErrorKind::invalid_state, "equatorial state with nonzero s3");
    }
    return Decomposition({{1.0, PureState(s.s1(), s.s2(), 0.0)}});
  }
  const double ratio = std::clamp(s.s3() / s3p, -1.0, 1.0);
  const double p_plus = 0.5 * (1.0 + ratio);
  return Decomposition({{p_plus, PureState(s.s1(), s.s2(), s3p)},
                        {1.0 - p_plus, PureState(s.s1(), s.s2(), -s3p)}});
}

Decomposition optimal_decomposition(const DensityMatrix& rho) {
  return optimal_decomposition(density_to_stokes(rho));
}

}  // namespace qrbg::qubit
