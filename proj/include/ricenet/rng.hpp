#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace ricenet {

// Deterministic random stream. Independent sub-streams are derived from a
// tuple of integers (e.g. cohort seed, subject index) through std::seed_seq,
// so any subject or fold can be regenerated in isolation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng derive(std::initializer_list<std::uint64_t> key);
    static Rng derive(std::span<const std::uint64_t> key);

    double uniform(double lo = 0.0, double hi = 1.0)
    {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double sd = 1.0)
    {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }
    // Uniform integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi)
    {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t next() { return engine_(); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace ricenet
