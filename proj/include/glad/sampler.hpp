#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "glad/channel.hpp"
#include "glad/rng.hpp"
#include "glad/utility.hpp"

namespace glad {

struct SamplerError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Inverse temperature. Infinity is kept symbolic so the limiting
// distribution (uniform over the maximizers) never goes through exp().
class Temperature {
public:
    Temperature() = default;
    Temperature(double beta) : beta_(beta) {  // NOLINT(google-explicit-constructor)
        if (!(beta >= 0.0)) throw SamplerError("beta must be nonnegative");
    }
    static Temperature infinite() {
        Temperature t;
        t.beta_ = std::numeric_limits<double>::infinity();
        return t;
    }

    bool is_infinite() const { return std::isinf(beta_); }
    double value() const { return beta_; }

    friend bool operator==(const Temperature&, const Temperature&) = default;

private:
    double beta_ = 0.0;
};

// Per-link power levels {0, dP, 2 dP, ..., P_max} with dP = P_max / (L - 1).
class PowerGrid {
public:
    PowerGrid() = default;
    PowerGrid(std::vector<std::size_t> levels, std::vector<double> max_power)
        : levels_(std::move(levels)), max_power_(std::move(max_power)) {
        if (levels_.size() != max_power_.size() || levels_.empty())
            throw SamplerError("power grid needs one level count per link");
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            if (levels_[i] < 2) throw SamplerError("each link needs at least 2 power levels");
            if (!(max_power_[i] > 0.0)) throw SamplerError("max power must be positive");
        }
    }

    static PowerGrid uniform(const GainMatrix& g, std::size_t levels) {
        return PowerGrid(std::vector<std::size_t>(g.size(), levels),
                         std::vector<double>(g.max_power().begin(), g.max_power().end()));
    }

    std::size_t links() const { return levels_.size(); }
    std::size_t levels(std::size_t i) const { return levels_[i]; }
    double step(std::size_t i) const { return max_power_[i] / static_cast<double>(levels_[i] - 1); }

    // The top level is returned as P_max itself rather than (L-1) * dP.
    double level(std::size_t i, std::size_t k) const {
        return k + 1 == levels_[i] ? max_power_[i] : static_cast<double>(k) * step(i);
    }

    std::vector<double> link_levels(std::size_t i) const {
        std::vector<double> out(levels_[i]);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = level(i, k);
        return out;
    }

    // Index of the level equal to p (nearest level, for robustness).
    std::size_t index_of(std::size_t i, double p) const {
        const double k = std::round(p / step(i));
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(levels_[i] - 1)));
    }

    friend bool operator==(const PowerGrid&, const PowerGrid&) = default;

private:
    std::vector<std::size_t> levels_;
    std::vector<double> max_power_;
};

// log of exp(-beta / U). U = 0 gives -inf (the U -> 0+ limit) except at
// beta = 0, where every weight is exp(0) = 1.
inline double gibbs_weight(double u_value, Temperature beta) {
    if (!(u_value >= 0.0)) throw SamplerError("utility must be nonnegative");
    if (beta.value() == 0.0) return 0.0;
    if (u_value == 0.0) return -std::numeric_limits<double>::infinity();
    return -beta.value() / u_value;
}

struct DiscreteDistribution {
    std::vector<double> support;
    std::vector<double> probability;
};

// Density tabulated on a uniform grid over [0, P_max] with its trapezoid
// CDF; sampling inverts the CDF by linear interpolation.
struct ContinuousDistribution {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<double> cdf;
};

using UpdateDistribution = std::variant<DiscreteDistribution, ContinuousDistribution>;

// Normalizes log-weights with max subtraction; all -inf gives uniform.
inline std::vector<double> normalize_log_weights(std::span<const double> log_w) {
    std::vector<double> p(log_w.size());
    if (p.empty()) return p;
    const double top = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(top)) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return p;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) total += p[k] = std::exp(log_w[k] - top);
    for (auto& x : p) x /= total;
    return p;
}

// Uniform over the indices attaining the maximum (exact equality).
inline std::vector<double> argmax_uniform(std::span<const double> utilities) {
    std::vector<double> p(utilities.size(), 0.0);
    if (p.empty()) return p;
    const double top = *std::max_element(utilities.begin(), utilities.end());
    const auto count = static_cast<double>(std::count(utilities.begin(), utilities.end(), top));
    for (std::size_t k = 0; k < p.size(); ++k)
        if (utilities[k] == top) p[k] = 1.0 / count;
    return p;
}

// Gibbs conditional over candidate levels given their utilities.
inline DiscreteDistribution discrete_update(Temperature beta, std::span<const double> levels,
                                            std::span<const double> utilities) {
    if (levels.size() != utilities.size() || levels.empty())
        throw SamplerError("need one utility per candidate level");
    DiscreteDistribution d;
    d.support.assign(levels.begin(), levels.end());
    if (beta.is_infinite()) {
        d.probability = argmax_uniform(utilities);
        return d;
    }
    std::vector<double> log_w(utilities.size());
    for (std::size_t k = 0; k < log_w.size(); ++k) log_w[k] = gibbs_weight(utilities[k], beta);
    d.probability = normalize_log_weights(log_w);
    return d;
}

// Link i's update distribution over its grid, given the SINR vector each
// candidate level would produce. `subset` restricts the utility to those
// links (empty = all links).
inline DiscreteDistribution discrete_update(std::size_t i, Temperature beta, const PowerGrid& grid,
                                            std::span<const SinrVector> candidate_sinrs,
                                            const Utility& u,
                                            std::span<const std::size_t> subset = {}) {
    if (i >= grid.links()) throw SamplerError("link index out of range");
    if (candidate_sinrs.size() != grid.levels(i))
        throw SamplerError("need one candidate SINR vector per power level");
    std::vector<double> util(candidate_sinrs.size());
    for (std::size_t k = 0; k < util.size(); ++k)
        util[k] = subset.empty() ? u.evaluate(candidate_sinrs[k]) : u.evaluate(candidate_sinrs[k], subset);
    const auto levels = grid.link_levels(i);
    return discrete_update(beta, levels, util);
}

inline constexpr std::size_t kMinQuadraturePoints = 16;
inline constexpr std::size_t kDefaultQuadraturePoints = 512;

// Continuous update on [0, p_max]: exp(-beta/U) tabulated on an N-point
// uniform grid and normalized by the trapezoid rule. An all-zero density
// falls back to uniform. At beta = infinity the result is a discrete
// distribution, uniform over the maximizing grid points.
template <typename SinrFn>
UpdateDistribution continuous_update(double p_max, Temperature beta, std::size_t points,
                                     SinrFn&& sinr_fn, const Utility& u,
                                     std::span<const std::size_t> subset = {}) {
    if (points < kMinQuadraturePoints)
        throw SamplerError("continuous update needs at least " + std::to_string(kMinQuadraturePoints) +
                           " quadrature points");
    if (!(p_max > 0.0)) throw SamplerError("max power must be positive");
    std::vector<double> grid(points);
    const double h = p_max / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) grid[k] = k + 1 == points ? p_max : static_cast<double>(k) * h;

    std::vector<double> util(points);
    for (std::size_t k = 0; k < points; ++k) {
        const SinrVector s = sinr_fn(grid[k]);
        util[k] = subset.empty() ? u.evaluate(s) : u.evaluate(s, subset);
    }
    if (beta.is_infinite()) {
        DiscreteDistribution d{{}, {}};
        const auto p = argmax_uniform(util);
        for (std::size_t k = 0; k < points; ++k) {
            if (p[k] > 0.0) {
                d.support.push_back(grid[k]);
                d.probability.push_back(p[k]);
            }
        }
        return d;
    }

    std::vector<double> w(points);
    for (std::size_t k = 0; k < points; ++k) w[k] = gibbs_weight(util[k], beta);
    const double top = *std::max_element(w.begin(), w.end());
    if (std::isfinite(top)) {
        for (auto& x : w) x = std::exp(x - top);
    } else {
        std::fill(w.begin(), w.end(), 1.0);
    }
    ContinuousDistribution c;
    c.grid = std::move(grid);
    c.cdf.assign(points, 0.0);
    for (std::size_t k = 1; k < points; ++k) c.cdf[k] = c.cdf[k - 1] + 0.5 * h * (w[k - 1] + w[k]);
    const double z = c.cdf.back();
    c.density.resize(points);
    for (std::size_t k = 0; k < points; ++k) {
        c.density[k] = w[k] / z;
        c.cdf[k] /= z;
    }
    c.cdf.back() = 1.0;
    return c;
}

// Estimated SINRs of every link if link i switches to p_candidate, using
// possibly stale announcements (same formula as sinr_after_own_change).
// Stale announcements can imply an interference-plus-noise below the noise
// power, or even negative; with `noise_floor` given, those denominators are
// floored at n_j.
inline SinrVector iglad_sinr_estimate(std::size_t i, double p_candidate, double p_old_i,
                                      std::span<const Announcement> last_announced,
                                      std::span<const double> gain_row_i,
                                      std::span<const double> noise_floor = {}) {
    SinrVector out = sinr_after_own_change(i, p_candidate, p_old_i, last_announced, gain_row_i);
    if (noise_floor.empty() || p_candidate == p_old_i) return out;
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto& a = last_announced[j];
        if (j == i || a.signal_power == 0.0) continue;
        const double denom = a.signal_power / a.gamma + gain_row_i[j] * (p_candidate - p_old_i);
        if (denom < noise_floor[j]) out[j] = a.signal_power / noise_floor[j];
    }
    return out;
}

// Candidate-SINR reconstruction as run by a transmitter with only its local
// view. Where the announced values cannot be inverted (own power zero, or
// an announced SINR of zero) it falls back to the interference-plus-noise
// last reconstructed as s_j / gamma_j (initially the noise floor). Stale
// estimates of a receiver's interference-plus-noise are floored at its
// noise power.
struct CandidateEstimator {
    std::size_t self = 0;
    double p_old = 0.0;
    std::span<const Announcement> announced;
    std::span<const double> interference;  // fallback s_j / gamma_j per link
    std::span<const double> noise_floor;   // empty: no flooring
    std::span<const double> gain_row;
    std::span<const std::size_t> links;     // links to estimate; empty = all

    SinrVector operator()(double p_new) const {
        SinrVector out(gain_row.size(), 0.0);
        const double delta = p_new - p_old;
        auto one = [&](std::size_t j) {
            const auto& a = announced[j];
            if (j == self) {
                if (p_new == p_old) return a.gamma;
                if (p_old > 0.0 && a.gamma > 0.0) return a.gamma * p_new / p_old;
                return gain_row[self] * p_new / interference[self];
            }
            if (delta == 0.0) return a.gamma;
            if (a.signal_power == 0.0) return 0.0;
            const double base = a.gamma > 0.0 ? a.signal_power / a.gamma : interference[j];
            double denom = base + gain_row[j] * delta;
            if (!noise_floor.empty() && denom < noise_floor[j]) denom = noise_floor[j];
            return a.signal_power / denom;
        };
        if (links.empty()) {
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = one(j);
        } else {
            for (std::size_t j : links) out[j] = one(j);
        }
        return out;
    }
};

// Continuous update with stale announcements.
inline UpdateDistribution iglad_update(std::size_t i, Temperature beta, std::size_t points,
                                       double p_max, double p_old_i,
                                       std::span<const Announcement> last_announced,
                                       std::span<const double> gain_row_i, const Utility& u,
                                       std::span<const double> noise_floor = {}) {
    auto fn = [&](double p) { return iglad_sinr_estimate(i, p, p_old_i, last_announced, gain_row_i, noise_floor); };
    return continuous_update(p_max, beta, points, fn, u);
}

// As iglad_update, with the utility evaluated on the neighborhood's SINRs.
inline UpdateDistribution niglad_update(std::size_t i, std::span<const std::size_t> neighborhood,
                                        Temperature beta, std::size_t points, double p_max,
                                        double p_old_i, std::span<const Announcement> last_announced,
                                        std::span<const double> gain_row_i, const Utility& u,
                                        std::span<const double> noise_floor = {}) {
    if (std::find(neighborhood.begin(), neighborhood.end(), i) == neighborhood.end())
        throw SamplerError("neighborhood must contain the updating link");
    auto fn = [&](double p) { return iglad_sinr_estimate(i, p, p_old_i, last_announced, gain_row_i, noise_floor); };
    return continuous_update(p_max, beta, points, fn, u, neighborhood);
}

inline double sample(const DiscreteDistribution& d, Rng& rng) {
    const double r = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < d.probability.size(); ++k) {
        if (d.probability[k] <= 0.0) continue;
        acc += d.probability[k];
        last_positive = k;
        if (r < acc) return d.support[k];
    }
    return d.support[last_positive];
}

inline double sample(const ContinuousDistribution& c, Rng& rng) {
    const double r = rng.uniform();
    // First grid point whose CDF exceeds r; the cell before it has mass.
    const auto it = std::upper_bound(c.cdf.begin(), c.cdf.end(), r);
    if (it == c.cdf.end()) return c.grid.back();
    const auto hi = static_cast<std::size_t>(it - c.cdf.begin());
    const auto lo = hi - 1;
    const double t = (r - c.cdf[lo]) / (c.cdf[hi] - c.cdf[lo]);
    return c.grid[lo] + t * (c.grid[hi] - c.grid[lo]);
}

inline double sample(const UpdateDistribution& dist, Rng& rng) {
    return std::visit([&](const auto& d) { return sample(d, rng); }, dist);
}

// Total probability mass (sum, or trapezoid integral of the density).
inline double total_mass(const UpdateDistribution& dist) {
    if (const auto* d = std::get_if<DiscreteDistribution>(&dist)) {
        double s = 0.0;
        for (double p : d->probability) s += p;
        return s;
    }
    const auto& c = std::get<ContinuousDistribution>(dist);
    double s = 0.0;
    for (std::size_t k = 1; k < c.grid.size(); ++k)
        s += 0.5 * (c.grid[k] - c.grid[k - 1]) * (c.density[k - 1] + c.density[k]);
    return s;
}

}  // namespace glad
