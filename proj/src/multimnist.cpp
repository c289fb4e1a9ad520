#include "xncaps/multimnist.hpp"

#include <algorithm>

#include "xncaps/parallel.hpp"
#include "xncaps/rng.hpp"

namespace xncaps {

namespace {
constexpr std::size_t kDigit = 28;
constexpr std::size_t kCanvas = 36;
constexpr std::size_t kMargin = (kCanvas - kDigit) / 2;

void paste_max(DenseTensor& out, std::size_t image, const DenseTensor& src, std::size_t digit,
               long dx, long dy) {
  for (std::size_t y = 0; y < kDigit; ++y) {
    for (std::size_t x = 0; x < kDigit; ++x) {
      const std::size_t cy = std::size_t(long(y + kMargin) + dy);
      const std::size_t cx = std::size_t(long(x + kMargin) + dx);
      float& dst = out[(image * kCanvas + cy) * kCanvas + cx];
      dst = std::max(dst, src[(digit * kDigit + y) * kDigit + x]);
    }
  }
}
}  // namespace

LabeledImages multimnist_compose(const LabeledImages& base, std::size_t per_digit,
                                 std::size_t shift_max, std::uint64_t rng_seed) {
  if (per_digit < 1) throw DomainError("multimnist_compose: per_digit must be >= 1");
  if (shift_max > kMargin)
    throw DomainError("multimnist_compose: shift " + std::to_string(shift_max) +
                      " would push a digit off the " + std::to_string(kCanvas) + "-pixel canvas");
  const Shape& s = base.images.shape();
  if (s.rank() != 4 || s[1] != kDigit || s[2] != kDigit || s[3] != 1)
    throw ShapeError("multimnist_compose: base images must be [n, 28, 28, 1], got " + s.str());
  const std::size_t n = s[0];
  if (base.labels.size() != n) throw DomainError("multimnist_compose: label count mismatch");

  std::size_t distinct = 0;
  {
    std::vector<bool> seen(256, false);
    for (const auto& entry : base.labels) {
      if (entry.size() != 1)
        throw DomainError("multimnist_compose: base digits must carry exactly one label");
      if (!seen[entry[0] & 0xff]) {
        seen[entry[0] & 0xff] = true;
        ++distinct;
      }
    }
  }
  if (distinct < 2)
    throw DomainError("multimnist_compose: need at least two distinct labels to overlay");

  LabeledImages out;
  out.images = DenseTensor(Shape{n * per_digit, kCanvas, kCanvas, 1});
  out.labels.assign(n * per_digit, {});
  out.class_count = base.class_count;

  const long range = 2 * long(shift_max) + 1;
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      Rng rng(Rng::mix(rng_seed, d));
      for (std::size_t r = 0; r < per_digit; ++r) {
        std::size_t partner = d;
        for (int attempt = 0; attempt < 64; ++attempt) {
          partner = std::size_t(rng.uniform_index(n));
          if (base.labels[partner][0] != base.labels[d][0]) break;
        }
        while (base.labels[partner][0] == base.labels[d][0]) partner = (partner + 1) % n;

        const long dx1 = long(rng.uniform_index(std::uint64_t(range))) - long(shift_max);
        const long dy1 = long(rng.uniform_index(std::uint64_t(range))) - long(shift_max);
        const long dx2 = long(rng.uniform_index(std::uint64_t(range))) - long(shift_max);
        const long dy2 = long(rng.uniform_index(std::uint64_t(range))) - long(shift_max);

        const std::size_t idx = d * per_digit + r;
        paste_max(out.images, idx, base.images, d, dx1, dy1);
        paste_max(out.images, idx, base.images, partner, dx2, dy2);
        out.labels[idx] = {base.labels[d][0], base.labels[partner][0]};
      }
    }
  });
  return out;
}

}  // namespace xncaps
