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

// Seeded randomness extraction with binary Toeplitz hashing.
//
// A block of n raw bits x is mapped to m output bits y = T x over GF(2),
// with T[j][k] = seed[j - k + n - 1] for a seed of n + m - 1 bits. The
// output length per block is floor(h n - 4 log2(1/eps) - 2) for a certified
// min-entropy rate h and statistical distance eps.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qrbg/bitstream.hpp"
#include "qrbg/minentropy.hpp"

namespace qrbg::extract {

/// floor(h * n - 4 * log2(1/epsilon) - 2). May be <= 0, which callers must
/// treat as "no extraction possible".
long long output_length(entropy::EntropyRate h, std::size_t n, double epsilon);

struct ExtractorParams {
  std::size_t n = 0;
  double epsilon = 0.0;
  entropy::EntropyRate h_rate;
  long long m = 0;

  /// Computes m; throws insufficient_entropy when m < 1.
  static ExtractorParams make(entropy::EntropyRate h, std::size_t n, double epsilon);
  /// m / n.
  double ratio() const { return static_cast<double>(m) / static_cast<double>(n); }
};

/// Public Toeplitz seed of exactly n + m - 1 bits.
class HashSeed {
 public:
  HashSeed(BitStream bits, std::size_t n, std::size_t m);

  const BitStream& bits() const { return bits_; }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

 private:
  BitStream bits_;
  std::size_t n_;
  std::size_t m_;
};

/// Toeplitz hash. Output bit j is coefficient n - 1 + j of the GF(2)[z]
/// product seed(z) * raw(z), so on CPUs with carry-less multiply the hash is
/// a word-level middle product (ceil(n/64) * ceil(m/64) multiplies).
///
/// Portable kernel: XOR over set raw bits k of the seed window starting at
/// n - 1 - k (column k of T). 64 pre-shifted copies of the seed make every
/// window a run of whole words, so each set bit costs ceil(m/64) word XORs.
class ToeplitzHasher {
 public:
  enum class Kernel { automatic, portable };

  explicit ToeplitzHasher(const HashSeed& seed, Kernel kernel = Kernel::automatic);

  /// True when the carry-less multiply kernel is in use.
  bool uses_clmul() const { return clmul_; }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::size_t raw_words() const { return (n_ + 63) / 64; }
  std::size_t out_words() const { return out_words_; }

  /// raw: n bits, little-endian within words. out: ceil(m/64) words.
  void hash(std::span<const std::uint64_t> raw, std::span<std::uint64_t> out) const;

 private:
  std::size_t n_;
  std::size_t m_;
  std::size_t out_words_;
  bool clmul_ = false;
  std::size_t stride_ = 0;  // words per shifted copy
  std::vector<std::uint64_t> shifted_;
  std::vector<std::uint64_t> seed_words_;  // zero padded, clmul kernel only
};

/// One block: raw must hold exactly seed.n() bits.
BitStream toeplitz_extract(const HashSeed& seed, const BitStream& raw);

struct UniversalityReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t seeds = 0;           // 2^(n+m-1)
  std::uint64_t pairs = 0;           // distinct input pairs checked
  std::uint64_t min_collisions = 0;  // over pairs, seeds that collide
  std::uint64_t max_collisions = 0;
  std::uint64_t expected = 0;        // seeds / 2^m
  bool exact() const { return min_collisions == expected && max_collisions == expected; }
};

/// Exhaustive 2-universality check: for every pair x != y of n-bit inputs,
/// counts the seeds on which toeplitz_extract collides. n <= 12, m <= 6.
UniversalityReport universality_check(std::size_t n, std::size_t m);

/// Source of public hash seeds.
class SeedProvider {
 public:
  virtual ~SeedProvider() = default;
  virtual HashSeed draw(std::size_t n, std::size_t m) = 0;
  /// Text for the `seed_file` / provenance header entry.
  virtual std::string provenance() const = 0;
};

/// Operating-system entropy (getrandom / /dev/urandom via std::random_device).
class SystemSeedProvider final : public SeedProvider {
 public:
  HashSeed draw(std::size_t n, std::size_t m) override;
  std::string provenance() const override { return "system"; }
};

/// Seed from a QRBGBITS file with role=seed; its first n + m - 1 bits are used.
class FileSeedProvider final : public SeedProvider {
 public:
  explicit FileSeedProvider(std::filesystem::path path);
  HashSeed draw(std::size_t n, std::size_t m) override;
  std::string provenance() const override { return "file:" + path_.string(); }

 private:
  std::filesystem::path path_;
};

/// Deterministic seed from the simulation generator. For reproducible
/// fixtures only; not a secure seed.
class PrngSeedProvider final : public SeedProvider {
 public:
  explicit PrngSeedProvider(std::uint64_t seed) : seed_(seed) {}
  HashSeed draw(std::size_t n, std::size_t m) override;
  std::string provenance() const override;

 private:
  std::uint64_t seed_;
};

/// Writes `bits` as a role=seed bit file.
void write_seed_file(const std::filesystem::path& path, const BitStream& bits);

struct ExtractionResult {
  BitStream output;
  std::size_t blocks = 0;
  std::size_t discarded_bits = 0;  // raw tail shorter than one block
  ExtractorParams params;
  BitStream seed;
  std::string seed_provenance;

  double ratio() const { return params.ratio(); }
  /// QRBGBITS header for the output file (role=extracted).
  BitFileHeader header() const;
};

/// Hashes every full n-bit block of raw with one seed drawn for the whole
/// session; the tail is discarded. Output length is blocks * m. Blocks are
/// hashed on `threads` workers (0: hardware concurrency) with output order
/// preserved.
ExtractionResult extract_stream(const BitStream& raw, const ExtractorParams& params,
                                SeedProvider& seeds, unsigned threads = 0);

}  // namespace qrbg::extract
