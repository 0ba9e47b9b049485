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

#include <benchmark/benchmark.h>

#include <vector>

#include "qrbg/extractor.hpp"
#include "qrbg/source_sim.hpp"
#include "qrbg/stat_tests.hpp"
#include "qrbg/tomography.hpp"

namespace {

using namespace qrbg;

source::SourceModel single_photon(double s1, double s3, std::uint64_t seed) {
  return {source::SinglePhoton{qubit::StokesVector(s1, 0.0, s3)}, seed};
}

// One Toeplitz block at the production shape (n = 10^5, h = 0.96, eps = 2^-64).
void toeplitz_block(benchmark::State& state, extract::ToeplitzHasher::Kernel kernel) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto params = extract::ExtractorParams::make(entropy::EntropyRate(0.96), n, 0x1.0p-64);
  extract::PrngSeedProvider seeds(1);
  const auto seed = seeds.draw(n, static_cast<std::size_t>(params.m));
  const extract::ToeplitzHasher hasher(seed, kernel);
  const auto raw = source::sample_raw_bits(single_photon(1.0, 0.0, 2), n);
  std::vector<std::uint64_t> in(hasher.raw_words()), out(hasher.out_words());
  raw.load_words(0, n, in);
  for (auto _ : state) {
    hasher.hash(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
  state.SetLabel(hasher.uses_clmul() ? "clmul" : "portable");
}

void BM_ToeplitzBlock(benchmark::State& state) {
  toeplitz_block(state, extract::ToeplitzHasher::Kernel::automatic);
}
void BM_ToeplitzBlockPortable(benchmark::State& state) {
  toeplitz_block(state, extract::ToeplitzHasher::Kernel::portable);
}
BENCHMARK(BM_ToeplitzBlock)->Arg(4096)->Arg(100'000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ToeplitzBlockPortable)->Arg(4096)->Arg(100'000)->Unit(benchmark::kMicrosecond);

void BM_ExtractStream(benchmark::State& state) {
  const std::size_t n = 100'000;
  const auto raw = source::sample_raw_bits(single_photon(1.0, 0.0, 3), 20 * n);
  const auto params = extract::ExtractorParams::make(entropy::EntropyRate(0.96), n, 0x1.0p-64);
  for (auto _ : state) {
    extract::PrngSeedProvider seeds(4);
    auto r = extract::extract_stream(raw, params, seeds, static_cast<unsigned>(state.range(0)));
    benchmark::DoNotOptimize(r.output.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(raw.size()));
}
BENCHMARK(BM_ExtractStream)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_SampleRawBits(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto bits = source::sample_raw_bits(single_photon(0.9, 0.3, 5), n);
    benchmark::DoNotOptimize(bits.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleRawBits)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = single_photon(0.9996, 0.0, 6);
  const auto log = source::sample_events(model, source::BasisSchedule::blocked(n), n);
  for (auto _ : state) {
    auto c = tomography::reconstruct(log, 0.01);
    benchmark::DoNotOptimize(c.rate.bits_per_sample());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Calibrate)->Arg(300'000)->Unit(benchmark::kMillisecond);

void BM_Battery(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto bits = source::sample_raw_bits(single_photon(1.0, 0.0, 7), n);
  const auto config = stats::BatteryConfig::for_length(n);
  for (auto _ : state) {
    auto results = stats::run_battery(bits, config);
    benchmark::DoNotOptimize(results.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Battery)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
