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

// Qubit states in Stokes (Bloch) form: density matrices, pure states and
// convex decompositions into pure states.

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

namespace qrbg::qubit {

/// Absolute tolerance for physicality, Hermiticity and trace checks.
inline constexpr double kStateTolerance = 1e-12;
/// Tolerance on the Bloch length of a pure state.
inline constexpr double kPureTolerance = 1e-9;

/// Plain 3-vector; may hold non-physical values (e.g. raw tomography output).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm_squared() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(norm_squared()); }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }

  friend Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Vec3 operator*(double k, const Vec3& v) {
    return {k * v.x, k * v.y, k * v.z};
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Stokes parameters (s1, s2, s3) with s0 = 1. Always inside or on the
/// Poincare sphere; inputs up to kStateTolerance outside are pulled back
/// onto the surface, anything further out throws invalid_state.
class StokesVector {
 public:
  StokesVector() = default;
  StokesVector(double s1, double s2, double s3);
  explicit StokesVector(const Vec3& v) : StokesVector(v.x, v.y, v.z) {}

  double s1() const { return v_.x; }
  double s2() const { return v_.y; }
  double s3() const { return v_.z; }
  const Vec3& vec() const { return v_; }

  double length() const { return v_.norm(); }
  /// |S1 - i S2|, the transverse (coherence) radius.
  double coherence() const { return std::hypot(v_.x, v_.y); }

  static bool is_physical(const Vec3& v) {
    return v.norm() <= 1.0 + kStateTolerance;
  }

 private:
  Vec3 v_{};
};

/// 2x2 density matrix in the computational (H/V) basis.
class DensityMatrix {
 public:
  using Complex = std::complex<double>;

  /// Validates Hermiticity, unit trace and positivity.
  static DensityMatrix from_entries(Complex e00, Complex e01, Complex e10,
                                    Complex e11);

  Complex entry(int row, int col) const { return e_[2 * row + col]; }
  Complex determinant() const { return e_[0] * e_[3] - e_[1] * e_[2]; }
  /// Eigenvalues, ascending.
  std::pair<double, double> eigenvalues() const;

 private:
  friend DensityMatrix stokes_to_density(const StokesVector& s);
  DensityMatrix() = default;
  std::array<Complex, 4> e_{};
};

/// Pure state stored as a unit Bloch vector; no global-phase ambiguity.
class PureState {
 public:
  explicit PureState(const Vec3& bloch);
  PureState(double s1, double s2, double s3) : PureState(Vec3{s1, s2, s3}) {}

  const StokesVector& bloch() const { return bloch_; }

 private:
  StokesVector bloch_;
};

struct DecompositionTerm {
  double weight;
  PureState state;
};

/// Probability-weighted list of pure states. Weights must be non-negative
/// and sum to one within kStateTolerance.
class Decomposition {
 public:
  explicit Decomposition(std::vector<DecompositionTerm> terms);

  std::span<const DecompositionTerm> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  const DecompositionTerm& operator[](std::size_t i) const { return terms_[i]; }

 private:
  std::vector<DecompositionTerm> terms_;
};

struct BornProbabilities {
  double p0;
  double p1;
};

DensityMatrix stokes_to_density(const StokesVector& s);
/// Checked overload for unvalidated vectors.
DensityMatrix stokes_to_density(const Vec3& s);
StokesVector density_to_stokes(const DensityMatrix& rho);

/// Outcome probabilities for a computational-basis (H/V) measurement.
BornProbabilities born_probabilities(const DensityMatrix& rho);

DensityMatrix mix(const Decomposition& d);
/// Bloch vector of the mixture, the weight-averaged term vectors.
StokesVector mix_bloch(const Decomposition& d);

/// The decomposition most informative to an adversary: two pure states
/// with Bloch vectors (s1, s2, +-s3'), s3' = sqrt(1 - s1^2 - s2^2), and
/// weights (1 +- s3/s3')/2.
///
/// When the state lies on the equator of the sphere (s3' = 0) it is already
/// pure and the result holds that single state with weight one.
Decomposition optimal_decomposition(const DensityMatrix& rho);
Decomposition optimal_decomposition(const StokesVector& s);

}  // namespace qrbg::qubit
