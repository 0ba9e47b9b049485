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

// Packed bit sequences and the QRBGBITS v1 file container.
//
// Bits are packed most-significant-bit first: bit 0 is the high bit of byte
// 0. A final partial byte is zero padded; the true length travels with the
// stream (and in the file header).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qrbg {

class BitStream {
 public:
  BitStream() = default;
  /// n zero bits.
  explicit BitStream(std::size_t n_bits);
  /// Parses a string of '0'/'1' characters; whitespace is ignored.
  static BitStream from_string(std::string_view bits);
  /// Adopts packed bytes; padding bits past bit_length are cleared.
  static BitStream from_bytes(std::vector<std::uint8_t> bytes, std::size_t bit_length);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool operator[](std::size_t i) const {
    return (bytes_[i >> 3] >> (7 - (i & 7))) & 1U;
  }
  void set(std::size_t i, bool value);
  void push_back(bool value);
  void reserve(std::size_t n_bits) { bytes_.reserve((n_bits + 7) / 8); }

  /// Appends the first n_bits of little-endian-within-word words
  /// (bit k of the run is bit k%64 of words[k/64]).
  void append_words(std::span<const std::uint64_t> words, std::size_t n_bits);
  /// Copies bits [start, start + n_bits) into words in the same
  /// little-endian-within-word order; unused high bits of the last word are 0.
  void load_words(std::size_t start, std::size_t n_bits,
                  std::span<std::uint64_t> words) const;

  /// Bits [start, start + n_bits) as a new stream.
  BitStream slice(std::size_t start, std::size_t n_bits) const;

  std::size_t count_ones() const;
  std::string to_string() const;
  std::string to_hex() const;
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  friend bool operator==(const BitStream&, const BitStream&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t size_ = 0;
};

/// 16-byte magic opening every bit file.
inline constexpr std::string_view kBitFileMagic = "QRBGBITS v1     ";

/// Ordered `key=value` header of a bit file. bit_length is managed by the
/// writer and must not be set by callers.
class BitFileHeader {
 public:
  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct BitFile {
  BitFileHeader header;
  BitStream bits;
};

void write_bit_file(std::ostream& os, const BitFileHeader& header, const BitStream& bits);
void write_bit_file(const std::filesystem::path& path, const BitFileHeader& header,
                    const BitStream& bits);
BitFile read_bit_file(std::istream& is);
BitFile read_bit_file(const std::filesystem::path& path);

}  // namespace qrbg
