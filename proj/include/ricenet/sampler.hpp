#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ricenet/rng.hpp"

namespace ricenet {

// With-replacement draws where each index has weight 1 / (size of its class),
// so both classes are expected equally often. labels are 0/1.
std::vector<std::size_t> weighted_index_stream(std::span<const int> labels, Rng& rng, std::size_t n_draws);

} // namespace ricenet
