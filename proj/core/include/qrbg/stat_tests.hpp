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

// A-posteriori statistical checks on generated bits, following the
// NIST SP 800-22 formulas for seven of its tests. These only catch broken
// implementations; they say nothing about unpredictability.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "qrbg/bitstream.hpp"

namespace qrbg::stats {

inline constexpr double kSignificance = 0.01;

struct TestResult {
  std::string name;
  double statistic = 0.0;
  /// Smallest of p_values; the test passes iff p_value >= significance.
  double p_value = 0.0;
  std::vector<double> p_values;
  bool pass = false;
  std::string parameters;
};

TestResult monobit(const BitStream& bits);
TestResult block_frequency(const BitStream& bits, std::size_t block_len = 128);
TestResult runs(const BitStream& bits);
/// Block size and class table chosen from the stream length (>= 128 bits).
TestResult longest_run_of_ones(const BitStream& bits);
/// p_values = {forward, reverse}.
TestResult cumulative_sums(const BitStream& bits);
/// p_values = {P-value1, P-value2}; requires 2 <= m and 2^m <= len.
TestResult serial(const BitStream& bits, unsigned m = 16);
/// Requires 1 <= m and 2^(m+1) <= len.
TestResult approximate_entropy(const BitStream& bits, unsigned m = 10);

struct BatteryConfig {
  bool monobit = true;
  bool block_frequency = true;
  bool runs = true;
  bool longest_run = true;
  bool cumulative_sums = true;
  bool serial = true;
  bool approximate_entropy = true;
  std::size_t block_len = 128;
  unsigned serial_m = 16;
  unsigned apen_m = 10;

  static BatteryConfig none();
  /// All seven tests with parameters inside the recommended ranges for a
  /// stream of n bits (serial m < log2 n - 2, ApEn m < log2 n - 5).
  static BatteryConfig for_length(std::size_t n);
};

std::vector<TestResult> run_battery(const BitStream& bits, const BatteryConfig& config);

/// Fraction of results that passed; 1 for an empty list.
double pass_proportion(const std::vector<TestResult>& results);

/// `test=<name> stat=<float> p=<float> pass=<0|1>`, one line per result.
void write_test_report(std::ostream& os, const std::vector<TestResult>& results);

}  // namespace qrbg::stats
