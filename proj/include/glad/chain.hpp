#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "glad/channel.hpp"
#include "glad/sampler.hpp"
#include "glad/utility.hpp"

namespace glad {

struct ChainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CapExceeded : ChainError {
    CapExceeded(std::size_t required, std::size_t cap)
        : ChainError("state space has " + std::to_string(required) + " states, cap is " +
                     std::to_string(cap) + "; raise the cap to at least " + std::to_string(required)),
          required_cap(required) {}
    std::size_t required_cap;
};

inline constexpr std::size_t kSpectralStateCap = 4096;
inline constexpr std::size_t kEnumerationStateCap = 65536;

// Mixed-radix enumeration of the power lattice; link 0 is the fastest digit.
class StateSpace {
public:
    explicit StateSpace(PowerGrid grid) : grid_(std::move(grid)), stride_(grid_.links()) {
        std::size_t s = 1;
        for (std::size_t i = 0; i < grid_.links(); ++i) {
            stride_[i] = s;
            if (s > std::numeric_limits<std::size_t>::max() / grid_.levels(i))
                throw ChainError("state space size overflows");
            s *= grid_.levels(i);
        }
        size_ = s;
    }

    std::size_t size() const { return size_; }
    std::size_t links() const { return grid_.links(); }
    const PowerGrid& grid() const { return grid_; }
    std::size_t stride(std::size_t i) const { return stride_[i]; }

    std::size_t level_of(std::size_t state, std::size_t i) const {
        return (state / stride_[i]) % grid_.levels(i);
    }

    std::vector<std::size_t> decode(std::size_t state) const {
        std::vector<std::size_t> k(links());
        for (std::size_t i = 0; i < k.size(); ++i) k[i] = level_of(state, i);
        return k;
    }

    std::size_t encode(std::span<const std::size_t> levels) const {
        std::size_t s = 0;
        for (std::size_t i = 0; i < levels.size(); ++i) s += levels[i] * stride_[i];
        return s;
    }

    PowerVector powers(std::size_t state) const {
        PowerVector p(links());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = grid_.level(i, level_of(state, i));
        return p;
    }

    // State with link i's digit replaced by level k.
    std::size_t with_level(std::size_t state, std::size_t i, std::size_t k) const {
        return state - level_of(state, i) * stride_[i] + k * stride_[i];
    }

private:
    PowerGrid grid_;
    std::vector<std::size_t> stride_;
    std::size_t size_ = 0;
};

// U(gamma(p)) for every lattice point, with its extremes and maximizers.
struct UtilityLandscape {
    StateSpace space;
    std::vector<double> utility;
    double best = 0.0;   // U*
    double worst = 0.0;  // U_*
    std::vector<std::size_t> optimal_set;
};

inline UtilityLandscape enumerate_utilities(const GainMatrix& g, const PowerGrid& grid, const Utility& u,
                                            std::size_t cap = kEnumerationStateCap) {
    if (grid.links() != g.size()) throw ChainError("grid and gain matrix differ in link count");
    UtilityLandscape land{StateSpace(grid), {}, 0.0, 0.0, {}};
    if (land.space.size() > cap) throw CapExceeded(land.space.size(), cap);
    land.utility.resize(land.space.size());
    for (std::size_t s = 0; s < land.space.size(); ++s) land.utility[s] = u.evaluate(sinr(g, land.space.powers(s)));
    land.best = *std::max_element(land.utility.begin(), land.utility.end());
    land.worst = *std::min_element(land.utility.begin(), land.utility.end());
    for (std::size_t s = 0; s < land.utility.size(); ++s)
        if (land.utility[s] == land.best) land.optimal_set.push_back(s);
    return land;
}

struct Optimum {
    double utility = 0.0;
    std::vector<std::size_t> states;
};

// Exhaustive search over the power lattice.
inline Optimum brute_force_optimum(const GainMatrix& g, const PowerGrid& grid, const Utility& u,
                                   std::size_t cap = kEnumerationStateCap) {
    auto land = enumerate_utilities(g, grid, u, cap);
    return {land.best, std::move(land.optimal_set)};
}

// Omega_beta(p) proportional to exp(-beta / U(p)); at beta = infinity,
// uniform over the maximizers.
inline std::vector<double> stationary_distribution(const UtilityLandscape& land, Temperature beta) {
    if (beta.is_infinite()) return argmax_uniform(land.utility);
    std::vector<double> log_w(land.utility.size());
    for (std::size_t s = 0; s < log_w.size(); ++s) log_w[s] = gibbs_weight(land.utility[s], beta);
    return normalize_log_weights(log_w);
}

inline std::vector<double> stationary_distribution(const GainMatrix& g, const PowerGrid& grid,
                                                   const Utility& u, Temperature beta) {
    return stationary_distribution(enumerate_utilities(g, grid, u), beta);
}

inline double mean_utility(const UtilityLandscape& land, Temperature beta) {
    const auto omega = stationary_distribution(land, beta);
    double m = 0.0;
    for (std::size_t s = 0; s < omega.size(); ++s) m += omega[s] * land.utility[s];
    return m;
}

inline double variance_utility(const UtilityLandscape& land, Temperature beta) {
    const auto omega = stationary_distribution(land, beta);
    double m = 0.0;
    for (std::size_t s = 0; s < omega.size(); ++s) m += omega[s] * land.utility[s];
    double v = 0.0;
    for (std::size_t s = 0; s < omega.size(); ++s) {
        const double d = land.utility[s] - m;
        v += d * d * omega[s];
    }
    return v;
}

// Stationary probability of one maximizer (all maximizers share it).
inline double prob_optimal(const UtilityLandscape& land, Temperature beta) {
    return stationary_distribution(land, beta)[land.optimal_set.front()];
}

// <1/U>_beta. States with U = 0 carry zero mass for beta > 0 and are
// skipped; at beta = 0 they make the expectation infinite.
inline double inverse_utility_mean(const UtilityLandscape& land, Temperature beta) {
    const auto omega = stationary_distribution(land, beta);
    double acc = 0.0;
    for (std::size_t s = 0; s < omega.size(); ++s) {
        if (omega[s] == 0.0) continue;
        if (land.utility[s] == 0.0) return std::numeric_limits<double>::infinity();
        acc += omega[s] / land.utility[s];
    }
    return acc;
}

// U*^2 (1 - |P*| Omega(p*))^2 + (U* - U_*)^2 (1 - |P*| Omega(p*)).
inline double variance_bound_from_mass(const UtilityLandscape& land, double optimal_mass) {
    const double y = 1.0 - optimal_mass;
    const double gap = land.best - land.worst;
    return land.best * land.best * y * y + gap * gap * y;
}

inline double variance_bound(const UtilityLandscape& land, Temperature beta) {
    const double mass = static_cast<double>(land.optimal_set.size()) * prob_optimal(land, beta);
    return variance_bound_from_mass(land, mass);
}

namespace detail {

// Smallest beta (to bisection precision) with pred(beta) true, for a
// predicate that is monotone false -> true in beta and false at lo = 0.
template <typename Pred>
std::optional<double> bisect_threshold(Pred pred) {
    double lo = 0.0;
    double hi = 1.0;
    while (!pred(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) return std::nullopt;
    }
    for (int it = 0; it < 400 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (pred(mid) ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace detail

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Solves mean_utility(beta) = target using monotonicity in beta.
inline double beta_for_mean(const UtilityLandscape& land, double target) {
    const double u0 = mean_utility(land, Temperature(0.0));
    if (!(target > u0 && target < land.best))
        throw DomainError("target mean must lie strictly between " + std::to_string(u0) + " and " +
                          std::to_string(land.best));
    const auto beta = detail::bisect_threshold([&](double b) { return mean_utility(land, b) >= target; });
    if (!beta) throw DomainError("target mean not reached at any finite beta");
    return *beta;
}

// Variance-bound value at beta = 0.
inline double variance_bound_at_zero(const UtilityLandscape& land) {
    return variance_bound(land, Temperature(0.0));
}

// Smallest beta with variance_bound(beta) <= delta. delta = 0 is only met
// in the limit and returns infinity.
inline Temperature beta_for_variance(const UtilityLandscape& land, double delta) {
    if (!(delta >= 0.0)) throw DomainError("delta must be nonnegative");
    if (delta >= variance_bound_at_zero(land)) return Temperature(0.0);
    if (delta == 0.0) return Temperature::infinite();
    const auto beta = detail::bisect_threshold([&](double b) { return variance_bound(land, b) <= delta; });
    return beta ? Temperature(*beta) : Temperature::infinite();
}

// Closed-form route: the maximizer probability at which the bound equals
// delta, then beta from the monotone Omega_beta(p*). The zero branch uses
// the bound at beta = 0, with threshold 1 - |P*|/|P|.
struct ClosedFormBeta {
    double zero_branch_threshold = 0.0;
    double target_optimal_prob = 0.0;
    Temperature beta;
};

inline ClosedFormBeta beta_for_variance_closed_form(const UtilityLandscape& land, double delta) {
    if (!(delta >= 0.0)) throw DomainError("delta must be nonnegative");
    const double n_opt = static_cast<double>(land.optimal_set.size());
    const double frac = n_opt / static_cast<double>(land.space.size());
    const double top = land.best;
    const double gap = land.best - land.worst;
    ClosedFormBeta out;
    out.zero_branch_threshold = top * top * (1.0 - frac) * (1.0 - frac) + gap * gap * (1.0 - frac);
    if (delta >= out.zero_branch_threshold) {
        out.target_optimal_prob = prob_optimal(land, Temperature(0.0));
        out.beta = Temperature(0.0);
        return out;
    }
    const double r = gap * gap / (2.0 * top * top);
    out.target_optimal_prob = (1.0 + r - std::sqrt(delta / (top * top) + r * r)) / n_opt;
    if (out.target_optimal_prob >= 1.0 / n_opt) {
        out.beta = Temperature::infinite();
        return out;
    }
    const auto beta = detail::bisect_threshold(
        [&](double b) { return prob_optimal(land, b) >= out.target_optimal_prob; });
    out.beta = beta ? Temperature(*beta) : Temperature::infinite();
    return out;
}

inline double tv_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ChainError("distributions differ in size");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
    return 0.5 * acc;
}

// Pi = (1/M) sum_i Pi_i where Pi_i resamples link i's level from the Gibbs
// conditional given the other links' levels.
inline Eigen::MatrixXd build_transition_matrix(const GainMatrix& g, const PowerGrid& grid, const Utility& u,
                                               Temperature beta, std::size_t cap = kSpectralStateCap) {
    if (grid.links() != g.size()) throw ChainError("grid and gain matrix differ in link count");
    const StateSpace space(grid);
    if (space.size() > cap) throw CapExceeded(space.size(), cap);
    const std::size_t m = g.size();
    const double w = 1.0 / static_cast<double>(m);
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.size()),
                                               static_cast<Eigen::Index>(space.size()));
    for (std::size_t s = 0; s < space.size(); ++s) {
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<SinrVector> cands(grid.levels(i));
            for (std::size_t k = 0; k < cands.size(); ++k) cands[k] = sinr(g, space.powers(space.with_level(s, i, k)));
            const auto lambda = discrete_update(i, beta, grid, cands, u);
            for (std::size_t k = 0; k < cands.size(); ++k)
                pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(space.with_level(s, i, k))) +=
                    w * lambda.probability[k];
        }
    }
    return pi;
}

struct Spectrum {
    std::complex<double> lambda2;
    double modulus = 0.0;
};

// Second-largest-magnitude eigenvalue: exactly one eigenvalue (the one
// closest to 1) is removed, so a repeated unit eigenvalue shows up as
// modulus 1.
inline Spectrum second_eigenvalue(const Eigen::MatrixXd& pi) {
    if (pi.rows() != pi.cols() || pi.rows() == 0) throw ChainError("transition matrix must be square");
    if (pi.rows() == 1) return {{0.0, 0.0}, 0.0};
    Eigen::EigenSolver<Eigen::MatrixXd> solver(pi, false);
    if (solver.info() != Eigen::Success) {
        throw ChainError("eigensolver failed on " + std::to_string(pi.rows()) + "x" +
                         std::to_string(pi.cols()) + " matrix (1-norm " +
                         std::to_string(pi.cwiseAbs().colwise().sum().maxCoeff()) + ", max entry " +
                         std::to_string(pi.maxCoeff()) + ")");
    }
    const auto& ev = solver.eigenvalues();
    Eigen::Index unit = 0;
    for (Eigen::Index k = 1; k < ev.size(); ++k)
        if (std::abs(ev[k] - 1.0) < std::abs(ev[unit] - 1.0)) unit = k;
    Spectrum sp{{0.0, 0.0}, -1.0};
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (k == unit) continue;
        if (std::abs(ev[k]) > sp.modulus) sp = {ev[k], std::abs(ev[k])};
    }
    return sp;
}

struct ChainModel {
    UtilityLandscape landscape;
    Eigen::MatrixXd pi;
    std::vector<double> omega;
    Spectrum spectrum;
    const std::vector<std::size_t>& optimal_set() const { return landscape.optimal_set; }
};

inline ChainModel analyze_chain(const GainMatrix& g, const PowerGrid& grid, const Utility& u, Temperature beta,
                                std::size_t cap = kSpectralStateCap) {
    ChainModel c{enumerate_utilities(g, grid, u, cap), build_transition_matrix(g, grid, u, beta, cap), {}, {}};
    c.omega = stationary_distribution(c.landscape, beta);
    c.spectrum = second_eigenvalue(c.pi);
    return c;
}

struct MixingReport {
    std::vector<double> tv;  // tv[k] = ||initial Pi^k - omega||_var
    Spectrum spectrum;
};

inline MixingReport mixing_analysis(const ChainModel& chain, std::span<const double> initial, std::size_t k_max) {
    const auto n = static_cast<Eigen::Index>(chain.omega.size());
    if (static_cast<Eigen::Index>(initial.size()) != n) throw ChainError("initial distribution has wrong size");
    if (!(chain.spectrum.modulus < 1.0))
        throw ChainError("|lambda2| = " + std::to_string(chain.spectrum.modulus) + " is not below 1");
    MixingReport r;
    r.spectrum = chain.spectrum;
    Eigen::RowVectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v[k] = initial[static_cast<std::size_t>(k)];
    std::vector<double> cur(initial.begin(), initial.end());
    for (std::size_t k = 0; k <= k_max; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) cur[static_cast<std::size_t>(j)] = v[j];
        r.tv.push_back(tv_distance(cur, chain.omega));
        v = v * chain.pi;
    }
    return r;
}

// Least-squares slope of log tv[k] against k over the second half of the
// points that stay above `floor`.
inline double asymptotic_log_slope(std::span<const double> tv, double floor = 1e-12) {
    std::size_t end = 0;
    while (end < tv.size() && tv[end] > floor) ++end;
    const std::size_t begin = end / 2;
    if (end - begin < 2) throw ChainError("not enough TV points above the floor to fit a slope");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
        const double x = static_cast<double>(k);
        const double y = std::log(tv[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace glad
