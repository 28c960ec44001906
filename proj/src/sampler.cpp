#include "ricenet/sampler.hpp"

#include <array>
#include <random>

#include "ricenet/errors.hpp"

namespace ricenet {

std::vector<std::size_t> weighted_index_stream(std::span<const int> labels, Rng& rng, std::size_t n_draws)
{
    std::array<std::size_t, 2> count{};
    for (int l : labels) {
        if (l != 0 && l != 1) {
            throw PreconditionError("weighted_index_stream: labels must be 0 or 1");
        }
        ++count[l];
    }
    if (count[0] == 0 || count[1] == 0) {
        throw PreconditionError("weighted_index_stream: both classes must be present");
    }
    std::vector<double> w(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        w[i] = 1.0 / static_cast<double>(count[labels[i]]);
    }
    std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
    std::vector<std::size_t> out(n_draws);
    for (auto& i : out) {
        i = dist(rng.engine());
    }
    return out;
}

} // namespace ricenet
