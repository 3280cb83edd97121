#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace glad {

// Seedable generator with platform-independent variate generation.
// std::uniform_real_distribution is implementation-defined, so traces
// would not be bit-identical across standard libraries; the conversions
// below are fixed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    // Uniform on {0, ..., n - 1}; n must be positive.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Derives an independent stream, so that e.g. epoch times and power
    // samples do not share state.
    Rng split(std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(engine_() >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        Rng child;
        child.engine_.seed(seq);
        return child;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace glad
