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

#include "qrbg/minentropy.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/binomial.hpp>

#include "qrbg/error.hpp"

namespace qrbg::entropy {
namespace {

// -log2((1 + |z|) / 2): entropy of a pure state with Bloch z-component z.
double pure_entropy_from_z(double z) {
  const double pmax = 0.5 * (1.0 + std::min(1.0, std::abs(z)));
  return -std::log2(pmax);
}

// 1 - c^2 as s3^2 + (1 - |s|^2). Equal to the direct form, but exact for
// states on the sphere, where 1 - c^2 cancels badly near the equator.
double one_minus_c2(const qubit::Vec3& s) {
  const double gap = 1.0 - s.norm_squared();
  return s.z * s.z + (gap > 8 * DBL_EPSILON ? gap : 0.0);
}

double f_from_stokes(const qubit::Vec3& s) {
  return -std::log2(0.5 * (1.0 + std::sqrt(std::min(1.0, one_minus_c2(s)))));
}

}  // namespace

EntropyRate::EntropyRate(double bits_per_sample) {
  if (!(bits_per_sample >= -1e-12 && bits_per_sample <= 1.0 + 1e-12)) {
    fail(ErrorKind::parameter, "entropy rate must lie in [0, 1]");
  }
  bits_ = std::clamp(bits_per_sample, 0.0, 1.0);
}

EntropyRate minentropy_pure(const qubit::PureState& psi) {
  return EntropyRate(pure_entropy_from_z(psi.bloch().s3()));
}

EntropyRate minentropy_decomposition(const qubit::Decomposition& d) {
  double acc = 0.0;
  for (const auto& t : d.terms()) {
    acc += t.weight * pure_entropy_from_z(t.state.bloch().s3());
  }
  return EntropyRate(acc);
}

double f_of_coherence(double c) {
  if (!(c >= 0.0) || c > 1.0 + qubit::kStateTolerance) {
    fail(ErrorKind::invalid_state, "coherence outside [0, 1]");
  }
  const double c2 = std::min(1.0, c * c);
  return -std::log2(0.5 * (1.0 + std::sqrt(1.0 - c2)));
}

EntropyRate f_rho(const qubit::StokesVector& s) { return EntropyRate(f_from_stokes(s.vec())); }

EntropyRate f_rho(const qubit::DensityMatrix& rho) {
  return f_rho(qubit::density_to_stokes(rho));
}

EntropyRate worst_case_minentropy(const qubit::DensityMatrix& rho) {
  return f_rho(rho);
}

EntropyRate oracle_min_over_decompositions(const qubit::DensityMatrix& rho,
                                           std::size_t directions) {
  if (directions < 8) {
    fail(ErrorKind::parameter, "oracle needs at least 8 chord directions");
  }
  const qubit::Vec3 r = qubit::density_to_stokes(rho).vec();
  const double r2 = r.norm_squared();
  if (r2 >= 1.0 - 1e-12) {
    return EntropyRate(pure_entropy_from_z(r.z));
  }

  // Polar rings from the pole (theta = 0) to the equator; azimuths span a
  // half turn since u and -u give the same chord.
  const auto rings = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(directions))));
  const std::size_t per_ring = std::max<std::size_t>(1, directions / rings);
  double best = 1.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < rings && used < directions; ++i) {
    const double theta =
        0.5 * std::numbers::pi * static_cast<double>(i) /
        static_cast<double>(rings - 1);
    for (std::size_t j = 0; j < per_ring && used < directions; ++j, ++used) {
      const double phi =
          std::numbers::pi * static_cast<double>(j) / static_cast<double>(per_ring);
      const qubit::Vec3 u{std::sin(theta) * std::cos(phi),
                          std::sin(theta) * std::sin(phi), std::cos(theta)};
      // |r + t u| = 1  ->  t^2 + 2 (r.u) t + (r^2 - 1) = 0
      const double b = r.dot(u);
      const double disc = std::sqrt(b * b + 1.0 - r2);
      const double t_plus = -b + disc;
      const double t_minus = -b - disc;
      const double span = t_plus - t_minus;
      const double w_plus = -t_minus / span;
      const double w_minus = t_plus / span;
      const double z_plus = r.z + t_plus * u.z;
      const double z_minus = r.z + t_minus * u.z;
      const double h = w_plus * pure_entropy_from_z(z_plus) +
                       w_minus * pure_entropy_from_z(z_minus);
      best = std::min(best, h);
    }
  }
  return EntropyRate(best);
}

double stokes_deviation(double s_hat, std::size_t n, double alpha,
                        ConfidenceMethod method) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorKind::parameter, "alpha must lie in (0, 1)");
  }
  if (n == 0) fail(ErrorKind::parameter, "need at least one sample per basis");
  const double nd = static_cast<double>(n);
  // Two coherence components, two tails each.
  const double log_term = std::log(4.0 / alpha);
  switch (method) {
    case ConfidenceMethod::clopper_pearson: {
      // Probability of the outcome that makes |s| large, floored to a whole
      // count so rounding never helps.
      const double k = std::floor(0.5 * (1.0 + std::abs(s_hat)) * nd + 1e-9);
      const double p_low = k <= 0.0 ? 0.0
          : boost::math::binomial_distribution<>::find_lower_bound_on_p(
                nd, std::min(k, nd), alpha / 4.0);
      return std::max(0.0, std::abs(s_hat) - (2.0 * p_low - 1.0));
    }
    case ConfidenceMethod::hoeffding:
      return std::sqrt(2.0 * log_term / nd);
    case ConfidenceMethod::empirical_bernstein: {
      if (n < 2) return 2.0;
      // Work with the 0/1 indicator p = (1 + s) / 2, then map back (x2).
      const double p = std::clamp(0.5 * (1.0 + s_hat), 0.0, 1.0);
      const double variance = p * (1.0 - p) * nd / (nd - 1.0);
      const double dp = std::sqrt(2.0 * variance * log_term / nd) +
                        7.0 * log_term / (3.0 * (nd - 1.0));
      return 2.0 * dp;
    }
  }
  return 2.0;
}

std::string_view method_name(ConfidenceMethod m) {
  switch (m) {
    case ConfidenceMethod::clopper_pearson: return "clopper_pearson";
    case ConfidenceMethod::empirical_bernstein: return "empirical_bernstein";
    case ConfidenceMethod::hoeffding: return "hoeffding";
  }
  return "?";
}

std::optional<ConfidenceMethod> parse_method(std::string_view name) {
  for (auto m : {ConfidenceMethod::clopper_pearson, ConfidenceMethod::empirical_bernstein,
                 ConfidenceMethod::hoeffding}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

EntropyRate lower_confidence_rate(const qubit::StokesVector& s_hat,
                                  std::size_t n_per_basis, double alpha,
                                  ConfidenceMethod method) {
  const double d1 = stokes_deviation(s_hat.s1(), n_per_basis, alpha, method);
  const double d2 = stokes_deviation(s_hat.s2(), n_per_basis, alpha, method);
  const double c_hat = s_hat.coherence();
  if (c_hat == 0.0) return EntropyRate(0.0);
  const double deviation =
      d1 * std::abs(s_hat.s1()) / c_hat + d2 * std::abs(s_hat.s2()) / c_hat;
  const double c_low = std::clamp(c_hat - deviation, 0.0, 1.0);
  return EntropyRate(f_of_coherence(c_low));
}

}  // namespace qrbg::entropy
