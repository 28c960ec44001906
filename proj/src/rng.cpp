#include "ricenet/rng.hpp"

#include <vector>

namespace ricenet {

Rng Rng::derive(std::initializer_list<std::uint64_t> key)
{
    return derive(std::span<const std::uint64_t>(key.begin(), key.size()));
}

Rng Rng::derive(std::span<const std::uint64_t> key)
{
    std::vector<std::uint32_t> words;
    words.reserve(key.size() * 2 + 1);
    words.push_back(0x52494345u); // domain tag
    for (auto k : key) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    Rng rng(0);
    rng.engine_.seed(seq);
    return rng;
}

} // namespace ricenet
