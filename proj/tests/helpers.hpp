#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "glad/channel.hpp"
#include "glad/rng.hpp"

namespace glad::testing {

// Random gains in [lo, hi) with a stronger diagonal.
inline GainMatrix random_gains(std::uint64_t seed, std::size_t m, double max_power = 1e-3, double noise = 1e-7) {
    Rng rng(seed);
    std::vector<double> g(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) g[i * m + j] = i == j ? rng.uniform(0.1, 1.0) : rng.uniform(0.001, 0.05);
    return GainMatrix(m, std::move(g), std::vector<double>(m, noise), std::vector<double>(m, max_power));
}

inline PowerVector random_powers(Rng& rng, const GainMatrix& g) {
    PowerVector p(g.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(0.05, 1.0) * g.max_power(i);
    return p;
}

inline double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace glad::testing
