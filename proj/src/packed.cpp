#include "xncaps/packed.hpp"

#include <bit>
#include <string>

namespace xncaps {

PackedVector PackedVector::complemented() const {
  PackedVector out(bit_len_);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = ~words_[w];
  const std::size_t tail = bit_len_ % 64;
  if (tail && !words_.empty()) out.words_.back() &= (std::uint64_t(1) << tail) - 1;
  return out;
}

std::int64_t xnor_popcount_dot_words(const std::uint64_t* a, const std::uint64_t* b,
                                     std::size_t n_bits) {
  const std::size_t full = n_bits / 64;
  std::int64_t agree = 0;
  for (std::size_t w = 0; w < full; ++w) agree += std::popcount(~(a[w] ^ b[w]));
  const std::size_t tail = n_bits % 64;
  if (tail) {
    const std::uint64_t mask = (std::uint64_t(1) << tail) - 1;
    agree += std::popcount(~(a[full] ^ b[full]) & mask);
  }
  return 2 * agree - std::int64_t(n_bits);
}

std::int64_t xnor_popcount_dot(const PackedVector& a, const PackedVector& b) {
  if (a.bit_len() != b.bit_len())
    throw ShapeError("xnor_popcount_dot: length mismatch " + std::to_string(a.bit_len()) +
                     " vs " + std::to_string(b.bit_len()));
  return xnor_popcount_dot_words(a.words(), b.words(), a.bit_len());
}

}  // namespace xncaps
