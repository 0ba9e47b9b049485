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

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "qrbg/error.hpp"

namespace qrbg::tomography {

using source::Basis;

std::size_t CountTable::total() const {
  std::size_t n = 0;
  for (const auto& b : by_basis) n += b.total();
  return n;
}

CountTable tally(const source::EventLog& log) {
  if (log.records.empty()) fail(ErrorKind::empty_input, "cannot tally an empty log");
  CountTable t;
  for (const auto& r : log.records) {
    auto& c = t[r.basis];
    (r.outcome ? c.n1 : c.n0) += 1;
  }
  return t;
}

TomographyResult estimate_stokes(const CountTable& counts, std::size_t count_floor) {
  TomographyResult out;
  std::array<double, 3> s{};
  constexpr Basis kOrder[3] = {Basis::X, Basis::Y, Basis::Z};
  std::size_t min_count = SIZE_MAX;
  for (int i = 0; i < 3; ++i) {
    const auto& c = counts[kOrder[i]];
    if (c.total() < std::max<std::size_t>(count_floor, 1)) {
      fail(ErrorKind::insufficient_data,
           std::string("basis ") + source::basis_char(kOrder[i]) + " has " +
               std::to_string(c.total()) + " outcomes, need " +
               std::to_string(std::max<std::size_t>(count_floor, 1)));
    }
    const double n = static_cast<double>(c.total());
    s[i] = (static_cast<double>(c.n0) - static_cast<double>(c.n1)) / n;
    out.std_error[i] = std::sqrt(std::max(0.0, 1.0 - s[i] * s[i]) / n);
    min_count = std::min(min_count, c.total());
  }
  out.s_raw = {s[0], s[1], s[2]};
  out.n_per_basis = min_count;
  const double len = out.s_raw.norm();
  if (len > 1.0) {
    out.projected = true;
    out.s_hat = qubit::StokesVector((1.0 / len) * out.s_raw);
  } else {
    out.s_hat = qubit::StokesVector(out.s_raw);
  }
  return out;
}

Certification reconstruct(const source::EventLog& log, double alpha,
                          entropy::ConfidenceMethod method, std::size_t count_floor) {
  Certification c;
  c.tomography = estimate_stokes(tally(log), count_floor);
  c.alpha = alpha;
  c.method = method;
  c.rate = entropy::lower_confidence_rate(c.tomography.s_hat, c.tomography.n_per_basis,
                                          alpha, method);
  return c;
}

void write_state_report(std::ostream& os, const Certification& c) {
  const auto& t = c.tomography;
  const auto old_precision = os.precision(12);
  os << "s1=" << t.s_hat.s1() << '\n'
     << "s2=" << t.s_hat.s2() << '\n'
     << "s3=" << t.s_hat.s3() << '\n'
     << "stderr1=" << t.std_error[0] << '\n'
     << "stderr2=" << t.std_error[1] << '\n'
     << "stderr3=" << t.std_error[2] << '\n'
     << "projected=" << (t.projected ? 1 : 0) << '\n'
     << "n_per_basis=" << t.n_per_basis << '\n'
     << "minentropy_point=" << entropy::f_rho(t.s_hat).bits_per_sample() << '\n'
     << "minentropy_rate=" << c.rate.bits_per_sample() << '\n'
     << "alpha=" << c.alpha << '\n'
     << "bound="
     << entropy::method_name(c.method)
     << '\n';
  os.precision(old_precision);
}

}  // namespace qrbg::tomography
