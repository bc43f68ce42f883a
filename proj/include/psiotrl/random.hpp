#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace psiotrl {

/// Seeded random source shared by one run.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not (their algorithms are
/// implementation-defined), so the conversions to [0,1) and to a bounded
/// index are done here:
///   uniform():  top 53 bits of one draw scaled by 2^-53
///   index(n):   rejection sampling on one draw per attempt, x % n
/// Together these make every run reproducible across compilers and platforms.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - (max % n);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // UniformRandomBitGenerator, so std::shuffle and friends accept an Rng.
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace psiotrl
