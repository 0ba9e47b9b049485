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

#include "qrbg/tomography.hpp"

#include <gtest/gtest.h>

#include <complex>
#include <sstream>

#include "qrbg/error.hpp"
#include "support/generators.hpp"

using namespace qrbg;
using namespace qrbg::tomography;
using source::Basis;

namespace {

CountTable counts(std::size_t x0, std::size_t x1, std::size_t y0, std::size_t y1,
                  std::size_t z0, std::size_t z1) {
  CountTable t;
  t[Basis::X] = {x0, x1};
  t[Basis::Y] = {y0, y1};
  t[Basis::Z] = {z0, z1};
  return t;
}

// Nearest state by eigen-decomposition: clip negative eigenvalues, renormalise,
// read the Bloch vector back off the matrix.
qubit::Vec3 clip_eigenvalues(const qubit::Vec3& s) {
  using C = std::complex<double>;
  const double a = 0.5 * (1 + s.z), d = 0.5 * (1 - s.z);
  const C b(0.5 * s.x, -0.5 * s.y);
  const double mean = 0.5 * (a + d);
  const double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
  double lp = mean + rad, lm = mean - rad;
  // Eigenvectors of [[a, b], [b*, d]].
  C vp[2] = {b, C(lp - a)};
  C vm[2] = {b, C(lm - a)};
  auto normalise = [](C* v) {
    const double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    v[0] /= n;
    v[1] /= n;
  };
  normalise(vp);
  normalise(vm);
  lm = std::max(lm, 0.0);
  lp = std::max(lp, 0.0);
  const double tr = lp + lm;
  lp /= tr;
  lm /= tr;
  C rho[2][2];
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      rho[r][c] = lp * vp[r] * std::conj(vp[c]) + lm * vm[r] * std::conj(vm[c]);
    }
  }
  return {2 * rho[0][1].real(), -2 * rho[0][1].imag(), (rho[0][0] - rho[1][1]).real()};
}

}  // namespace

TEST(Tomography, BalancedCountsGiveTheCentre) {
  const auto r = estimate_stokes(counts(500, 500, 500, 500, 500, 500));
  EXPECT_EQ(r.s_hat.vec(), (qubit::Vec3{0, 0, 0}));
  EXPECT_FALSE(r.projected);
  EXPECT_EQ(r.n_per_basis, 1000U);
  EXPECT_NEAR(r.std_error[0], std::sqrt(1.0 / 1000), 1e-15);
}

TEST(Tomography, LinearInversion) {
  const auto r = estimate_stokes(counts(900, 100, 500, 500, 500, 500));
  EXPECT_NEAR(r.s_hat.s1(), 0.8, 1e-15);
  EXPECT_NEAR(r.std_error[0], std::sqrt((1 - 0.64) / 1000), 1e-15);
}

TEST(Tomography, ProjectsRadially) {
  // s_raw = (0.9, 0, 0.6)
  const auto r = estimate_stokes(counts(950, 50, 500, 500, 800, 200));
  EXPECT_TRUE(r.projected);
  const double len = std::sqrt(0.81 + 0.36);
  EXPECT_NEAR(r.s_raw.norm(), len, 1e-12);
  EXPECT_NEAR(r.s_hat.s1(), 0.9 / len, 1e-12);
  EXPECT_NEAR(r.s_hat.s3(), 0.6 / len, 1e-12);
  EXPECT_NEAR(r.s_hat.s1(), 0.832, 1e-3);
  EXPECT_NEAR(r.s_hat.s3(), 0.555, 1e-3);
}

TEST(Tomography, CountFloorAndEmptyInput) {
  try {
    estimate_stokes(counts(50, 49, 500, 500, 500, 500));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
  EXPECT_NO_THROW(estimate_stokes(counts(50, 49, 500, 500, 500, 500), 10));
  try {
    tally(source::EventLog{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_input);
  }
}

TEST(Tomography, IdealDiagonalSourceCertifiesNearlyOneBit) {
  const source::SourceModel m{source::SinglePhoton{qubit::StokesVector(1, 0, 0), 0.0}, 8};
  const auto log = source::sample_events(m, source::BasisSchedule::blocked(3000000), 3000000);
  const auto c = reconstruct(log, 0.01);
  EXPECT_GE(c.rate.bits_per_sample(), 0.99);
}

TEST(Tomography, IncoherentMixtureCertifiesNothing) {
  const source::SourceModel m{source::SinglePhoton{qubit::StokesVector(0, 0, 0.4), 0.0}, 9};
  const auto log = source::sample_events(m, source::BasisSchedule::blocked(30000), 30000);
  EXPECT_EQ(reconstruct(log, 0.01).rate.bits_per_sample(), 0.0);
}

TEST(Tomography, StateReportKeys) {
  const auto c = reconstruct(
      source::sample_events({source::SinglePhoton{qubit::StokesVector(0.7, 0, 0), 0.0}, 3},
                            source::BasisSchedule::blocked(3000), 3000),
      0.05);
  std::ostringstream os;
  os << '\n';
  write_state_report(os, c);
  for (const char* key : {"s1=", "s2=", "s3=", "stderr1=", "stderr2=", "stderr3=",
                          "projected=", "minentropy_rate=", "alpha="}) {
    EXPECT_NE(os.str().find(std::string("\n") + key), std::string::npos) << key;
  }
}

// --- properties ---------------------------------------------------------

TEST(TomographyProperty, ProjectionNeverRaisesTheEntropy) {
  gen::Engine g(51);
  for (int i = 0; i < 10000; ++i) {
    const auto n = [&] { return static_cast<std::size_t>(100 + g() % 400); };
    const auto r = estimate_stokes(counts(n(), n(), n(), n(), n(), n()));
    if (!r.projected) continue;
    const double c_raw = std::min(1.0, std::hypot(r.s_raw.x, r.s_raw.y));
    EXPECT_LE(r.s_hat.coherence(), c_raw + 1e-15);
    EXPECT_LE(entropy::f_rho(r.s_hat).bits_per_sample(), entropy::f_of_coherence(c_raw));
  }
  // Deterministic projected cases.
  for (int i = 0; i < 10000; ++i) {
    const double len = gen::uniform(g, 1.0 + 1e-9, 1.3);
    const auto v = len * gen::random_unit(g);
    const double c_raw = std::min(1.0, std::hypot(v.x, v.y));
    const qubit::StokesVector s((1.0 / v.norm()) * v);
    EXPECT_LE(entropy::f_rho(s).bits_per_sample(), entropy::f_of_coherence(c_raw) + 1e-15);
  }
}

TEST(TomographyProperty, RadialScalingIsEigenvalueClipping) {
  gen::Engine g(52);
  for (int i = 0; i < 10000; ++i) {
    const double len = gen::uniform(g, 1.0 + 1e-6, 1.3);
    const auto v = len * gen::random_unit(g);
    if (std::hypot(v.x, v.y) < 1e-6) continue;  // eigenvector formula degenerates
    const auto w = clip_eigenvalues(v);
    const auto radial = (1.0 / v.norm()) * v;
    EXPECT_NEAR(w.x, radial.x, 1e-9);
    EXPECT_NEAR(w.y, radial.y, 1e-9);
    EXPECT_NEAR(w.z, radial.z, 1e-9);
  }
}

TEST(TomographyProperty, EstimatesWithinFourStandardErrors) {
  gen::Engine g(53);
  int inside = 0;
  const int reps = 1000;
  for (int rep = 0; rep < reps; ++rep) {
    const auto s = gen::random_bloch(g);
    const source::SourceModel m{source::SinglePhoton{qubit::StokesVector(s), 0.0}, g()};
    const auto r = estimate_stokes(
        tally(source::sample_events(m, source::BasisSchedule::blocked(3000), 3000)));
    const double true_s[3] = {s.x, s.y, s.z};
    const double raw[3] = {r.s_raw.x, r.s_raw.y, r.s_raw.z};
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      // Floor the error at one count so |s| = 1 components are not flagged.
      const double se = std::max(r.std_error[k], 1.0 / 1000);
      ok = ok && std::abs(raw[k] - true_s[k]) <= 4 * se;
    }
    inside += ok;
  }
  EXPECT_GE(inside, 999);
}
