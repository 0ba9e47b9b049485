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

#include "qrbg/extractor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "qrbg/error.hpp"
#include "qrbg/rng.hpp"

#if defined(__x86_64__)
#include <immintrin.h>
#endif

namespace qrbg::extract {
namespace {

std::string format_epsilon(double epsilon) {
  const double k = -std::log2(epsilon);
  std::ostringstream os;
  if (k == std::round(k) && std::abs(k) < 4096) {
    os << "2^-" << static_cast<long long>(k);
  } else {
    os.precision(17);
    os << epsilon;
  }
  return os.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

long long output_length(entropy::EntropyRate h, std::size_t n, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    fail(ErrorKind::parameter, "epsilon must lie in (0, 1)");
  }
  const double value = h.bits_per_sample() * static_cast<double>(n) -
                       4.0 * std::log2(1.0 / epsilon) - 2.0;
  return static_cast<long long>(std::floor(value));
}

ExtractorParams ExtractorParams::make(entropy::EntropyRate h, std::size_t n, double epsilon) {
  if (n == 0) fail(ErrorKind::parameter, "block size must be positive");
  ExtractorParams p;
  p.n = n;
  p.epsilon = epsilon;
  p.h_rate = h;
  p.m = output_length(h, n, epsilon);
  if (p.m < 1) {
    std::ostringstream os;
    os.precision(6);
    os << "insufficient entropy: m = floor(h*n - 4*log2(1/eps) - 2) = floor("
       << h.bits_per_sample() << "*" << n << " - 4*" << std::log2(1.0 / epsilon)
       << " - 2) = " << p.m << " < 1";
    fail(ErrorKind::insufficient_entropy, os.str());
  }
  return p;
}

HashSeed::HashSeed(BitStream bits, std::size_t n, std::size_t m)
    : bits_(std::move(bits)), n_(n), m_(m) {
  if (n == 0 || m == 0) fail(ErrorKind::parameter, "Toeplitz sizes must be positive");
  if (bits_.size() != n + m - 1) {
    fail(ErrorKind::parameter, "Toeplitz seed needs n + m - 1 = " + std::to_string(n + m - 1) +
                                   " bits, got " + std::to_string(bits_.size()));
  }
}

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define QRBG_HAVE_CLMUL 1
namespace {

bool cpu_has_clmul() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("pclmul") && __builtin_cpu_supports("sse4.1");
}

// Product words [lo, lo + count + 1) of s(z) * x(z) into acc. s is padded
// so that every index a <= lo + count is readable.
__attribute__((target("pclmul,sse4.1"))) void clmul_middle(const std::uint64_t* s,
                                                          const std::uint64_t* x,
                                                          std::size_t xw, std::size_t lo,
                                                          std::size_t count,
                                                          std::uint64_t* acc) {
  __m128i carry = _mm_setzero_si128();
  // Word p of the product = low(sum_{a+b=p}) ^ high(sum_{a+b=p-1}).
  for (std::size_t p = lo == 0 ? 0 : lo - 1; p <= lo + count; ++p) {
    __m128i v0 = _mm_setzero_si128();
    __m128i v1 = _mm_setzero_si128();
    const std::size_t b_end = std::min(xw, p + 1);
    std::size_t b = 0;
    for (; b + 2 <= b_end; b += 2) {
      const __m128i xs = _mm_loadu_si128(reinterpret_cast<const __m128i*>(x + b));
      // s[p-b-1], s[p-b] in one load, high lane pairs with x[b].
      const __m128i ss = _mm_loadu_si128(reinterpret_cast<const __m128i*>(s + p - b - 1));
      v0 = _mm_xor_si128(v0, _mm_clmulepi64_si128(ss, xs, 0x01));
      v1 = _mm_xor_si128(v1, _mm_clmulepi64_si128(ss, xs, 0x10));
    }
    if (b < b_end) {
      v0 = _mm_xor_si128(v0, _mm_clmulepi64_si128(_mm_cvtsi64_si128(static_cast<long long>(s[p - b])),
                                                   _mm_cvtsi64_si128(static_cast<long long>(x[b])),
                                                   0x00));
    }
    const __m128i v = _mm_xor_si128(v0, v1);
    if (p >= lo) {
      acc[p - lo] = static_cast<std::uint64_t>(_mm_cvtsi128_si64(_mm_xor_si128(v, carry)));
    }
    carry = _mm_srli_si128(v, 8);
  }
}

}  // namespace
#endif

ToeplitzHasher::ToeplitzHasher(const HashSeed& seed, Kernel kernel)
    : n_(seed.n()), m_(seed.m()), out_words_((seed.m() + 63) / 64) {
  const std::size_t len = n_ + m_ - 1;
  const std::size_t len_words = (len + 63) / 64;
#ifdef QRBG_HAVE_CLMUL
  clmul_ = kernel == Kernel::automatic && cpu_has_clmul();
#else
  (void)kernel;
#endif
  if (clmul_) {
    // One zero word in front for the paired loads at b = p, and enough
    // behind to cover product word (n - 1) / 64 + out_words.
    const std::size_t top = (n_ - 1) / 64 + out_words_ + 2;
    seed_words_.assign(1 + std::max(top, len_words), 0);
    seed.bits().load_words(0, len, std::span(seed_words_).subspan(1, len_words));
    return;
  }
  stride_ = (n_ - 1) / 64 + out_words_ + 1;
  std::vector<std::uint64_t> words(std::max(stride_, len_words) + 1, 0);
  seed.bits().load_words(0, len, std::span(words).first(len_words));
  shifted_.assign(64 * stride_, 0);
  for (std::size_t r = 0; r < 64; ++r) {
    std::uint64_t* dst = shifted_.data() + r * stride_;
    for (std::size_t w = 0; w < stride_; ++w) {
      const std::uint64_t lo = words[w] >> r;
      const std::uint64_t hi = r == 0 ? 0 : words[w + 1] << (64 - r);
      dst[w] = lo | hi;
    }
  }
}

void ToeplitzHasher::hash(std::span<const std::uint64_t> raw,
                          std::span<std::uint64_t> out) const {
  if (raw.size() < raw_words() || out.size() < out_words_) {
    fail(ErrorKind::parameter, "Toeplitz hash buffer size mismatch");
  }
  std::uint64_t* __restrict acc = out.data();
  const std::size_t words = out_words_;
#ifdef QRBG_HAVE_CLMUL
  if (clmul_) {
    // Raw bits beyond n must not contribute; x gets one zero word of slack
    // for the paired loads.
    thread_local std::vector<std::uint64_t> x;
    thread_local std::vector<std::uint64_t> prod;
    const std::size_t xw = raw_words();
    x.assign(xw + 1, 0);
    std::copy_n(raw.begin(), xw, x.begin());
    if (n_ % 64 != 0) x[xw - 1] &= (std::uint64_t{1} << (n_ % 64)) - 1;
    const std::size_t lo = (n_ - 1) / 64;
    const unsigned r = static_cast<unsigned>((n_ - 1) % 64);
    prod.assign(words + 1, 0);
    clmul_middle(seed_words_.data() + 1, x.data(), xw, lo, words, prod.data());
    for (std::size_t t = 0; t < words; ++t) {
      acc[t] = r == 0 ? prod[t] : (prod[t] >> r) | (prod[t + 1] << (64 - r));
    }
    if (m_ % 64 != 0) acc[words - 1] &= (std::uint64_t{1} << (m_ % 64)) - 1;
    return;
  }
#endif
  std::fill(acc, acc + words, 0);
  for (std::size_t w = 0; w < raw_words(); ++w) {
    std::uint64_t x = raw[w];
    if (w == raw_words() - 1 && n_ % 64 != 0) x &= (std::uint64_t{1} << (n_ % 64)) - 1;
    while (x != 0) {
      const std::size_t k = 64 * w + static_cast<std::size_t>(std::countr_zero(x));
      x &= x - 1;
      const std::size_t offset = n_ - 1 - k;
      const std::uint64_t* __restrict src =
          shifted_.data() + (offset & 63) * stride_ + (offset >> 6);
      for (std::size_t t = 0; t < words; ++t) acc[t] ^= src[t];
    }
  }
  if (m_ % 64 != 0) acc[words - 1] &= (std::uint64_t{1} << (m_ % 64)) - 1;
}

BitStream toeplitz_extract(const HashSeed& seed, const BitStream& raw) {
  if (raw.size() != seed.n()) {
    fail(ErrorKind::parameter, "raw block has " + std::to_string(raw.size()) +
                                   " bits, seed expects " + std::to_string(seed.n()));
  }
  const ToeplitzHasher hasher(seed);
  std::vector<std::uint64_t> in(hasher.raw_words());
  std::vector<std::uint64_t> out(hasher.out_words());
  raw.load_words(0, raw.size(), in);
  hasher.hash(in, out);
  BitStream result;
  result.append_words(out, seed.m());
  return result;
}

UniversalityReport universality_check(std::size_t n, std::size_t m) {
  if (n == 0 || m == 0 || n > 12 || m > 6) {
    fail(ErrorKind::parameter, "universality_check supports 1 <= n <= 12, 1 <= m <= 6");
  }
  UniversalityReport rep;
  rep.n = n;
  rep.m = m;
  const std::size_t seed_len = n + m - 1;
  rep.seeds = std::uint64_t{1} << seed_len;
  rep.expected = rep.seeds >> m;
  const std::uint64_t inputs = std::uint64_t{1} << n;
  rep.pairs = inputs * (inputs - 1) / 2;

  auto seed_stream = [&](std::uint64_t s) {
    BitStream bits(seed_len);
    for (std::size_t i = 0; i < seed_len; ++i) bits.set(i, (s >> i) & 1U);
    return HashSeed(std::move(bits), n, m);
  };
  auto hash_all = [&](const ToeplitzHasher& h, std::vector<std::uint64_t>& outputs) {
    std::uint64_t in = 0;
    std::uint64_t out = 0;
    for (std::uint64_t x = 0; x < inputs; ++x) {
      in = x;
      h.hash(std::span(&in, 1), std::span(&out, 1));
      outputs[x] = out;
    }
  };

  std::vector<std::uint64_t> outputs(inputs);
  if (n <= 8) {
    // Every pair, every seed.
    std::vector<std::uint32_t> collisions(rep.pairs, 0);
    for (std::uint64_t s = 0; s < rep.seeds; ++s) {
      hash_all(ToeplitzHasher(seed_stream(s)), outputs);
      std::size_t idx = 0;
      for (std::uint64_t x = 0; x < inputs; ++x) {
        for (std::uint64_t y = x + 1; y < inputs; ++y, ++idx) {
          collisions[idx] += outputs[x] == outputs[y] ? 1U : 0U;
        }
      }
    }
    const auto [lo, hi] = std::minmax_element(collisions.begin(), collisions.end());
    rep.min_collisions = *lo;
    rep.max_collisions = *hi;
    return rep;
  }
  // Larger inputs: by GF(2) linearity a pair (x, y) collides exactly when
  // x ^ y hashes to zero, so one count per nonzero difference covers every
  // pair sharing it.
  std::vector<std::uint32_t> zero_hits(inputs, 0);
  for (std::uint64_t s = 0; s < rep.seeds; ++s) {
    hash_all(ToeplitzHasher(seed_stream(s)), outputs);
    for (std::uint64_t d = 1; d < inputs; ++d) zero_hits[d] += outputs[d] == 0 ? 1U : 0U;
  }
  const auto [lo, hi] = std::minmax_element(zero_hits.begin() + 1, zero_hits.end());
  rep.min_collisions = *lo;
  rep.max_collisions = *hi;
  return rep;
}

HashSeed SystemSeedProvider::draw(std::size_t n, std::size_t m) {
  std::random_device dev;
  const std::size_t len = n + m - 1;
  BitStream bits(len);
  std::uint32_t word = 0;
  for (std::size_t i = 0; i < len; ++i) {
    if (i % 32 == 0) word = dev();
    bits.set(i, (word >> (i % 32)) & 1U);
  }
  return HashSeed(std::move(bits), n, m);
}

FileSeedProvider::FileSeedProvider(std::filesystem::path path) : path_(std::move(path)) {}

HashSeed FileSeedProvider::draw(std::size_t n, std::size_t m) {
  BitFile file = read_bit_file(path_);
  const auto role = file.header.get("role");
  if (!role || *role != "seed") {
    fail(ErrorKind::io, "'" + path_.string() + "' is not a seed file (role=seed)");
  }
  const std::size_t len = n + m - 1;
  if (file.bits.size() < len) {
    fail(ErrorKind::io, "seed file holds " + std::to_string(file.bits.size()) +
                            " bits, need " + std::to_string(len));
  }
  return HashSeed(file.bits.slice(0, len), n, m);
}

HashSeed PrngSeedProvider::draw(std::size_t n, std::size_t m) {
  SimRng rng(seed_);
  const std::size_t len = n + m - 1;
  std::vector<std::uint64_t> words((len + 63) / 64);
  for (auto& w : words) w = rng.next();
  BitStream bits;
  bits.append_words(words, len);
  return HashSeed(std::move(bits), n, m);
}

std::string PrngSeedProvider::provenance() const {
  return std::string("prng:") + SimRng::kName + ":" + std::to_string(seed_);
}

void write_seed_file(const std::filesystem::path& path, const BitStream& bits) {
  BitFileHeader h;
  h.set("role", "seed");
  write_bit_file(path, h, bits);
}

BitFileHeader ExtractionResult::header() const {
  BitFileHeader h;
  h.set("role", "extracted");
  h.set("block_n", std::to_string(params.n));
  h.set("block_m", std::to_string(params.m));
  h.set("blocks", std::to_string(blocks));
  h.set("epsilon", format_epsilon(params.epsilon));
  h.set("h_rate", format_double(params.h_rate.bits_per_sample()));
  if (seed_provenance.rfind("file:", 0) == 0) {
    h.set("seed_file", seed_provenance.substr(5));
  } else {
    h.set("seed_hex", seed.to_hex());
    h.set("seed_source", seed_provenance);
  }
  return h;
}

ExtractionResult extract_stream(const BitStream& raw, const ExtractorParams& params,
                                SeedProvider& seeds, unsigned threads) {
  if (params.m < 1) {
    fail(ErrorKind::insufficient_entropy, "extractor output length m < 1; refusing to extract");
  }
  ExtractionResult result;
  result.params = params;
  const std::size_t n = params.n;
  const auto m = static_cast<std::size_t>(params.m);
  result.blocks = raw.size() / n;
  result.discarded_bits = raw.size() - result.blocks * n;

  HashSeed seed = seeds.draw(n, m);
  result.seed = seed.bits();
  result.seed_provenance = seeds.provenance();
  if (result.blocks == 0) return result;

  const ToeplitzHasher hasher(seed);
  const std::size_t out_words = hasher.out_words();
  std::vector<std::uint64_t> out(result.blocks * out_words);

  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, result.blocks));
  auto work = [&](std::size_t first, std::size_t step) {
    std::vector<std::uint64_t> in(hasher.raw_words());
    for (std::size_t b = first; b < result.blocks; b += step) {
      raw.load_words(b * n, n, in);
      hasher.hash(in, std::span(out).subspan(b * out_words, out_words));
    }
  };
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  result.output.reserve(result.blocks * m);
  for (std::size_t b = 0; b < result.blocks; ++b) {
    result.output.append_words(std::span(out).subspan(b * out_words, out_words), m);
  }
  return result;
}

}  // namespace qrbg::extract
