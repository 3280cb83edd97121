#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "glad/rng.hpp"

namespace glad {

// Powers in Watts, gains and SINRs linear and dimensionless.
using PowerVector = std::vector<double>;
using SinrVector = std::vector<double>;

struct ChannelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The incremental SINR update cannot be evaluated from the announced
// values alone (own power was zero, or an announced SINR is zero).
struct StaleBaseError : std::domain_error {
    using std::domain_error::domain_error;
};

// M x M gains G(i, j) from transmitter i to receiver j, with per-receiver
// noise and per-transmitter power limits.
class GainMatrix {
public:
    GainMatrix() = default;

    GainMatrix(std::size_t links, std::vector<double> gains, std::vector<double> noise,
               std::vector<double> max_power)
        : links_(links), gains_(std::move(gains)), noise_(std::move(noise)),
          max_power_(std::move(max_power)) {
        if (links_ == 0) throw ChannelError("gain matrix needs at least one link");
        if (gains_.size() != links_ * links_)
            throw ChannelError("gain matrix must have M*M entries");
        if (noise_.size() != links_ || max_power_.size() != links_)
            throw ChannelError("noise and max_power must have M entries");
        for (std::size_t i = 0; i < links_; ++i) {
            for (std::size_t j = 0; j < links_; ++j) {
                const double g = gain(i, j);
                if (!(g >= 0.0) || !std::isfinite(g))
                    throw ChannelError("gains must be finite and nonnegative");
            }
            if (!(gain(i, i) > 0.0)) throw ChannelError("direct gains G(i,i) must be positive");
            if (!(noise_[i] > 0.0)) throw ChannelError("noise powers must be positive");
            if (!(max_power_[i] > 0.0)) throw ChannelError("max powers must be positive");
        }
    }

    std::size_t size() const { return links_; }
    double gain(std::size_t tx, std::size_t rx) const { return gains_[tx * links_ + rx]; }
    double noise(std::size_t i) const { return noise_[i]; }
    double max_power(std::size_t i) const { return max_power_[i]; }

    // Gains from transmitter i to every receiver; this is all a transmitter
    // needs to know about the channel.
    std::span<const double> row(std::size_t tx) const {
        return {gains_.data() + tx * links_, links_};
    }

    std::span<const double> gains() const { return gains_; }
    std::span<const double> noise() const { return noise_; }
    std::span<const double> max_power() const { return max_power_; }

    bool fully_coupled() const {
        return std::all_of(gains_.begin(), gains_.end(), [](double g) { return g > 0.0; });
    }

    friend bool operator==(const GainMatrix&, const GainMatrix&) = default;

private:
    std::size_t links_ = 0;
    std::vector<double> gains_;
    std::vector<double> noise_;
    std::vector<double> max_power_;
};

inline void check_feasible(const GainMatrix& g, std::span<const double> p) {
    if (p.size() != g.size()) throw ChannelError("power vector length does not match gain matrix");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0) || p[i] > g.max_power(i))
            throw ChannelError("power of link " + std::to_string(i) + " outside [0, P_max]");
    }
}

// Interference plus noise at receiver i.
inline double interference_plus_noise(const GainMatrix& g, std::span<const double> p,
                                      std::size_t i) {
    double acc = g.noise(i);
    for (std::size_t j = 0; j < g.size(); ++j)
        if (j != i) acc += g.gain(j, i) * p[j];
    return acc;
}

inline SinrVector sinr(const GainMatrix& g, std::span<const double> p) {
    check_feasible(g, p);
    SinrVector out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        out[i] = g.gain(i, i) * p[i] / interference_plus_noise(g, p, i);
    return out;
}

inline std::vector<double> received_signal_power(const GainMatrix& g, std::span<const double> p) {
    check_feasible(g, p);
    std::vector<double> s(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) s[j] = g.gain(j, j) * p[j];
    return s;
}

// Last values a receiver put in a control packet.
struct Announcement {
    double gamma = 0.0;
    double signal_power = 0.0;
};

// Candidate SINRs after link i moves from p_old to p_new, reconstructed
// from announced (gamma_j, s_j) and the transmitter's own gain row only:
//   own link:   gamma_i * p_new / p_old
//   other link: s_j / (s_j / gamma_j + G(i, j) * (p_new - p_old))
// Stale announcements give the stale-information estimate with the same
// formula.
inline SinrVector sinr_after_own_change(std::size_t i, double p_new, double p_old,
                                        std::span<const Announcement> announced,
                                        std::span<const double> gain_row_i) {
    if (announced.size() != gain_row_i.size())
        throw ChannelError("announcement table and gain row differ in length");
    if (i >= announced.size()) throw ChannelError("link index out of range");
    SinrVector out(announced.size());
    const double delta = p_new - p_old;
    for (std::size_t j = 0; j < announced.size(); ++j) {
        const auto& a = announced[j];
        if (j == i) {
            if (p_new == p_old) {
                out[j] = a.gamma;
            } else if (p_old > 0.0) {
                out[j] = a.gamma * p_new / p_old;
            } else {
                throw StaleBaseError("own power was zero; own SINR cannot be scaled");
            }
            continue;
        }
        if (delta == 0.0) {
            out[j] = a.gamma;
        } else if (a.signal_power == 0.0) {
            out[j] = 0.0;
        } else if (a.gamma > 0.0) {
            out[j] = a.signal_power / (a.signal_power / a.gamma + gain_row_i[j] * delta);
        } else {
            throw StaleBaseError("announced SINR of link " + std::to_string(j) + " is zero");
        }
    }
    return out;
}

inline constexpr double kMinGainDistance = 0.1;

// Two-ray ground reflection: d^-4 with distances clamped at 0.1 m.
inline double two_ray_gain(double distance_m) {
    const double d = std::max(distance_m, kMinGainDistance);
    const double d2 = d * d;
    return 1.0 / (d2 * d2);
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Topology {
    std::vector<Point2> tx;
    std::vector<Point2> rx;
    double area_side = 0.0;
    friend bool operator==(const Topology&, const Topology&) = default;
};

struct RadioParams {
    double max_power = 1.0e-3;  // 1 mW
    double noise = 1.0e-7;      // 0.1 uW
};

inline GainMatrix gains_from_topology(const Topology& topo, RadioParams radio = {}) {
    const std::size_t m = topo.tx.size();
    std::vector<double> gains(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) gains[i * m + j] = two_ray_gain(distance(topo.tx[i], topo.rx[j]));
    return GainMatrix(m, std::move(gains), std::vector<double>(m, radio.noise),
                      std::vector<double>(m, radio.max_power));
}

// Transmitters uniform in the square, each receiver at a uniform angle and
// uniform length from its transmitter, clamped into the square. Any draw
// that lands on an existing node is redrawn.
inline std::pair<Topology, GainMatrix> generate_topology(std::uint64_t seed, std::size_t links,
                                                         double area_side, double min_len,
                                                         double max_len, RadioParams radio = {}) {
    if (links == 0) throw ChannelError("topology needs at least one link");
    if (!(area_side > 0.0)) throw ChannelError("area side must be positive");
    if (!(min_len > 0.0) || max_len < min_len) throw ChannelError("invalid link length range");

    Rng rng(seed);
    Topology topo;
    topo.area_side = area_side;
    auto taken = [&](Point2 q) {
        auto same = [&](Point2 o) { return distance(o, q) == 0.0; };
        return std::any_of(topo.tx.begin(), topo.tx.end(), same) ||
               std::any_of(topo.rx.begin(), topo.rx.end(), same);
    };
    constexpr double kTwoPi = 6.283185307179586476925;
    for (std::size_t i = 0; i < links; ++i) {
        Point2 t;
        do {
            t = {rng.uniform(0.0, area_side), rng.uniform(0.0, area_side)};
        } while (taken(t));
        topo.tx.push_back(t);
        Point2 r;
        do {
            const double angle = rng.uniform(0.0, kTwoPi);
            const double len = rng.uniform(min_len, max_len);
            r = {std::clamp(t.x + len * std::cos(angle), 0.0, area_side),
                 std::clamp(t.y + len * std::sin(angle), 0.0, area_side)};
        } while (taken(r));
        topo.rx.push_back(r);
    }
    GainMatrix g = gains_from_topology(topo, radio);
    return {std::move(topo), std::move(g)};
}

// The eight-link reference network (rows: transmitters, columns: receivers).
inline GainMatrix reference_network(RadioParams radio = {}) {
    std::vector<double> gains{
        0.1116, 0.0001, 0.0040, 0.0634, 0.0004, 0.0004, 0.0012, 0.0001,
        0.0001, 0.4939, 0.0004, 0.0002, 0.0411, 0.0064, 0.0046, 0.0024,
        0.0004, 0.0003, 0.1586, 0.0039, 0.0015, 0.0043, 0.0006, 0.0013,
        0.0185, 0.0001, 0.0159, 0.7325, 0.0006, 0.0007, 0.0013, 0.0002,
        0.0001, 0.0359, 0.0011, 0.0003, 0.2913, 0.1818, 0.0024, 0.0316,
        0.0001, 0.0127, 0.0010, 0.0002, 0.0321, 0.1142, 0.0010, 0.4109,
        0.0002, 0.0056, 0.0007, 0.0003, 0.0206, 0.0034, 0.1887, 0.0007,
        0.0001, 0.0040, 0.0003, 0.0001, 0.0021, 0.0037, 0.0003, 0.1041,
    };
    return GainMatrix(8, std::move(gains), std::vector<double>(8, radio.noise),
                      std::vector<double>(8, radio.max_power));
}

// Text format:
//   glad-gain-matrix 1
//   links M
//   gains
//   <M rows of M values>
//   noise <M values>
//   max_power <M values>
// Lines starting with '#' are comments.
inline void write_gain_matrix(std::ostream& os, const GainMatrix& g) {
    const auto m = g.size();
    os << "glad-gain-matrix 1\n" << "links " << m << "\n" << "gains\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) os << (j ? " " : "") << g.gain(i, j);
        os << '\n';
    }
    os << "noise";
    for (double n : g.noise()) os << ' ' << n;
    os << "\nmax_power";
    for (double p : g.max_power()) os << ' ' << p;
    os << '\n';
}

inline GainMatrix read_gain_matrix(std::istream& is) {
    std::stringstream body;
    for (std::string line; std::getline(is, line);) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        body << line << '\n';
    }
    auto expect = [&](const std::string& word) {
        std::string tok;
        if (!(body >> tok) || tok != word)
            throw ChannelError("gain matrix file: expected '" + word + "', got '" + tok + "'");
    };
    auto read_values = [&](std::size_t n, const char* what) {
        std::vector<double> v(n);
        for (auto& x : v)
            if (!(body >> x)) throw ChannelError(std::string("gain matrix file: truncated ") + what);
        return v;
    };
    expect("glad-gain-matrix");
    int version = 0;
    if (!(body >> version) || version != 1)
        throw ChannelError("gain matrix file: unsupported version");
    expect("links");
    std::size_t m = 0;
    if (!(body >> m) || m == 0) throw ChannelError("gain matrix file: bad link count");
    expect("gains");
    auto gains = read_values(m * m, "gains");
    expect("noise");
    auto noise = read_values(m, "noise");
    expect("max_power");
    auto pmax = read_values(m, "max_power");
    return GainMatrix(m, std::move(gains), std::move(noise), std::move(pmax));
}

}  // namespace glad
