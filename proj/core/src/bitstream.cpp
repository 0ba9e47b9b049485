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

#include "qrbg/bitstream.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "qrbg/error.hpp"

namespace qrbg {
namespace {

constexpr std::array<std::uint8_t, 256> make_reverse_table() {
  std::array<std::uint8_t, 256> t{};
  for (unsigned v = 0; v < 256; ++v) {
    unsigned r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> b) & 1U) << (7 - b);
    t[v] = static_cast<std::uint8_t>(r);
  }
  return t;
}

constexpr auto kReverse = make_reverse_table();

}  // namespace

BitStream::BitStream(std::size_t n_bits) : bytes_((n_bits + 7) / 8, 0), size_(n_bits) {}

BitStream BitStream::from_string(std::string_view bits) {
  BitStream out;
  out.reserve(bits.size());
  for (char c : bits) {
    if (c == '0' || c == '1') {
      out.push_back(c == '1');
    } else if (c != ' ' && c != '\n' && c != '\t' && c != '\r') {
      fail(ErrorKind::parameter, std::string("invalid bit character '") + c + "'");
    }
  }
  return out;
}

BitStream BitStream::from_bytes(std::vector<std::uint8_t> bytes, std::size_t bit_length) {
  if (bytes.size() != (bit_length + 7) / 8) {
    fail(ErrorKind::parameter, "byte count does not match bit length");
  }
  BitStream out;
  out.bytes_ = std::move(bytes);
  out.size_ = bit_length;
  if (bit_length % 8 != 0) {
    out.bytes_.back() &= static_cast<std::uint8_t>(0xFF00U >> (bit_length % 8));
  }
  return out;
}

void BitStream::set(std::size_t i, bool value) {
  const auto mask = static_cast<std::uint8_t>(0x80U >> (i & 7));
  if (value) {
    bytes_[i >> 3] |= mask;
  } else {
    bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
  }
}

void BitStream::push_back(bool value) {
  if ((size_ & 7) == 0) bytes_.push_back(0);
  if (value) bytes_[size_ >> 3] |= static_cast<std::uint8_t>(0x80U >> (size_ & 7));
  ++size_;
}

void BitStream::append_words(std::span<const std::uint64_t> words, std::size_t n_bits) {
  if (n_bits > words.size() * 64) fail(ErrorKind::parameter, "not enough words");
  std::size_t k = 0;
  // Bitwise until the stream is byte aligned, then whole bytes.
  while (k < n_bits && (size_ & 7) != 0) {
    push_back((words[k >> 6] >> (k & 63)) & 1U);
    ++k;
  }
  while (k + 8 <= n_bits) {
    std::uint8_t b;
    if ((k & 63) <= 56) {
      b = static_cast<std::uint8_t>(words[k >> 6] >> (k & 63));
    } else {
      b = static_cast<std::uint8_t>((words[k >> 6] >> (k & 63)) |
                                    (words[(k >> 6) + 1] << (64 - (k & 63))));
    }
    bytes_.push_back(kReverse[b]);
    size_ += 8;
    k += 8;
  }
  for (; k < n_bits; ++k) push_back((words[k >> 6] >> (k & 63)) & 1U);
}

void BitStream::load_words(std::size_t start, std::size_t n_bits,
                           std::span<std::uint64_t> words) const {
  if (start + n_bits > size_ || words.size() * 64 < n_bits) {
    fail(ErrorKind::parameter, "load_words range out of bounds");
  }
  std::fill(words.begin(), words.end(), 0);
  if ((start & 7) == 0) {
    const std::uint8_t* src = bytes_.data() + (start >> 3);
    const std::size_t whole = n_bits / 8;
    for (std::size_t b = 0; b < whole; ++b) {
      words[b >> 3] |= static_cast<std::uint64_t>(kReverse[src[b]]) << (8 * (b & 7));
    }
    for (std::size_t k = whole * 8; k < n_bits; ++k) {
      if ((*this)[start + k]) words[k >> 6] |= std::uint64_t{1} << (k & 63);
    }
    return;
  }
  for (std::size_t k = 0; k < n_bits; ++k) {
    if ((*this)[start + k]) words[k >> 6] |= std::uint64_t{1} << (k & 63);
  }
}

BitStream BitStream::slice(std::size_t start, std::size_t n_bits) const {
  if (start + n_bits > size_) fail(ErrorKind::parameter, "slice out of bounds");
  BitStream out;
  out.reserve(n_bits);
  if ((start & 7) == 0) {
    out.bytes_.assign(bytes_.begin() + static_cast<std::ptrdiff_t>(start >> 3),
                      bytes_.begin() + static_cast<std::ptrdiff_t>((start + n_bits + 7) >> 3));
    out.size_ = n_bits;
    if (n_bits % 8 != 0) {
      out.bytes_.back() &= static_cast<std::uint8_t>(0xFF00U >> (n_bits % 8));
    }
    return out;
  }
  for (std::size_t k = 0; k < n_bits; ++k) out.push_back((*this)[start + k]);
  return out;
}

std::size_t BitStream::count_ones() const {
  std::size_t n = 0;
  for (auto b : bytes_) n += static_cast<std::size_t>(std::popcount(b));
  return n;
}

std::string BitStream::to_string() const {
  std::string s(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if ((*this)[i]) s[i] = '1';
  }
  return s;
}

std::string BitStream::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes_.size() * 2);
  for (auto b : bytes_) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 15]);
  }
  return s;
}

void BitFileHeader::set(std::string key, std::string value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos ||
      value.find('\n') != std::string::npos) {
    fail(ErrorKind::parameter, "malformed bit file header entry '" + key + "'");
  }
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> BitFileHeader::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string BitFileHeader::require(std::string_view key) const {
  auto v = get(key);
  if (!v) fail(ErrorKind::io, "bit file header lacks '" + std::string(key) + "'");
  return *v;
}

void write_bit_file(std::ostream& os, const BitFileHeader& header, const BitStream& bits) {
  os << kBitFileMagic << '\n';
  os << "# bit_length=" << bits.size() << '\n';
  for (const auto& [k, v] : header.entries()) {
    if (k == "bit_length") continue;
    os << "# " << k << '=' << v << '\n';
  }
  os << '\n';
  os.write(reinterpret_cast<const char*>(bits.bytes().data()),
           static_cast<std::streamsize>(bits.bytes().size()));
  if (!os) fail(ErrorKind::io, "failed writing bit stream");
}

void write_bit_file(const std::filesystem::path& path, const BitFileHeader& header,
                    const BitStream& bits) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  write_bit_file(os, header, bits);
  os.flush();
  if (!os) fail(ErrorKind::io, "failed writing '" + path.string() + "'");
}

BitFile read_bit_file(std::istream& is) {
  std::string magic(kBitFileMagic.size(), '\0');
  if (!is.read(magic.data(), static_cast<std::streamsize>(magic.size())) ||
      magic != kBitFileMagic) {
    fail(ErrorKind::io, "missing QRBGBITS v1 magic");
  }
  if (is.peek() == '\n') is.get();
  BitFile file;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) break;
    if (line.rfind("# ", 0) != 0) fail(ErrorKind::io, "malformed header line: " + line);
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::io, "malformed header line: " + line);
    file.header.set(line.substr(2, eq - 2), line.substr(eq + 1));
  }
  const std::string len_text = file.header.require("bit_length");
  std::size_t bit_length = 0;
  const auto [ptr, ec] =
      std::from_chars(len_text.data(), len_text.data() + len_text.size(), bit_length);
  if (ec != std::errc() || ptr != len_text.data() + len_text.size()) {
    fail(ErrorKind::io, "bad bit_length '" + len_text + "'");
  }
  std::vector<std::uint8_t> payload((bit_length + 7) / 8);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(is.gcount()) != payload.size()) {
    fail(ErrorKind::io, "bit file payload shorter than bit_length");
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    fail(ErrorKind::io, "bit file payload longer than bit_length");
  }
  file.bits = BitStream::from_bytes(std::move(payload), bit_length);
  return file;
}

BitFile read_bit_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_bit_file(is);
}

}  // namespace qrbg
