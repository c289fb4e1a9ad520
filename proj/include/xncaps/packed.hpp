#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xncaps/errors.hpp"

namespace xncaps {

/// Sequence of ±1 values packed one bit per element (bit 1 is +1, bit 0 is -1)
/// into 64-bit words, least significant bit first. Bits past bit_len are zero
/// and stay zero through every operation.
class PackedVector {
 public:
  PackedVector() = default;
  explicit PackedVector(std::size_t bit_len)
      : bit_len_(bit_len), words_((bit_len + 63) / 64, 0) {}

  std::size_t bit_len() const { return bit_len_; }
  std::size_t word_count() const { return words_.size(); }
  const std::uint64_t* words() const { return words_.data(); }
  std::uint64_t* words() { return words_.data(); }

  void set_bit(std::size_t i, bool plus_one) {
    const std::uint64_t mask = std::uint64_t(1) << (i % 64);
    if (plus_one)
      words_[i / 64] |= mask;
    else
      words_[i / 64] &= ~mask;
  }

  bool bit(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1; }

  /// Sign of element i as a float (+1 or -1).
  float sign(std::size_t i) const { return bit(i) ? 1.0f : -1.0f; }

  /// Flips every logical bit; padding stays zero.
  PackedVector complemented() const;

 private:
  std::size_t bit_len_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Dot product of two ±1 sequences held as raw word spans: whole words go
/// through XNOR + popcount, the tail word is masked to the remaining bits.
std::int64_t xnor_popcount_dot_words(const std::uint64_t* a, const std::uint64_t* b,
                                     std::size_t n_bits);

/// Σ aᵢ·bᵢ over the ±1 interpretation; exact integer in [-n, n] with the
/// parity of n. Throws ShapeError when lengths differ.
std::int64_t xnor_popcount_dot(const PackedVector& a, const PackedVector& b);

}  // namespace xncaps
