#pragma once

#include <cstdint>

#include "xncaps/idx.hpp"

namespace xncaps {

/// Overlays every 28×28 digit with per_digit partners of a different class on
/// a 36×36 canvas. Each digit lands at the centered position plus an integer
/// shift drawn uniformly from [-shift_max, +shift_max] per axis; overlapping
/// pixels merge by max. Output image d·per_digit + r pairs digit d with its
/// r-th partner; labels are (base class, partner class).
///
/// Deterministic given the seed; digit d's draws depend only on (seed, d), so
/// work sharded over digits is partition-independent.
LabeledImages multimnist_compose(const LabeledImages& base, std::size_t per_digit,
                                 std::size_t shift_max, std::uint64_t rng_seed);

}  // namespace xncaps
