#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "glad/channel.hpp"
#include "glad/rng.hpp"
#include "glad/sampler.hpp"
#include "glad/utility.hpp"

namespace glad {

struct EngineError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Variant { glad_discrete, glad_continuous, iglad, niglad };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::glad_discrete: return "glad-discrete";
        case Variant::glad_continuous: return "glad-continuous";
        case Variant::iglad: return "iglad";
        case Variant::niglad: return "niglad";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "glad-discrete") return Variant::glad_discrete;
    if (s == "glad-continuous") return Variant::glad_continuous;
    if (s == "iglad") return Variant::iglad;
    if (s == "niglad") return Variant::niglad;
    throw EngineError("unknown variant '" + s + "'");
}

inline bool full_message_passing(Variant v) {
    return v == Variant::glad_discrete || v == Variant::glad_continuous;
}

// What a receiver observed that may trigger a control packet.
enum class ChangeEvent { own_update, sensed_sinr_change, sensed_power_change };

// GLAD receivers announce every change they sense; the I/NI variants only
// announce after their own link updated its power.
inline bool broadcast_rule(Variant v, ChangeEvent e) {
    return full_message_passing(v) || e == ChangeEvent::own_update;
}

struct ControlPacket {
    std::size_t sender = 0;
    double gamma = 0.0;
    double signal_power = 0.0;
    double timestamp = 0.0;
    // Interference plus noise measured at the receiver. Lets a transmitter
    // whose own power is zero (gamma = s = 0) still rebuild its SINR.
    double interference = 0.0;
    friend bool operator==(const ControlPacket&, const ControlPacket&) = default;
};

// Links whose receiver's control packets reach transmitter i with an SNR
// above gamma_bar (linear). The receiver-to-transmitter gain R_j -> T_i is
// approximated by G(j, i). Link i itself is always included.
inline std::vector<std::size_t> compute_neighborhood(std::size_t i, const GainMatrix& g,
                                                     double ctrl_power, double gamma_bar) {
    if (!(ctrl_power > 0.0)) throw EngineError("control power must be positive");
    if (!(gamma_bar >= 0.0)) throw EngineError("gamma_bar must be nonnegative");
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < g.size(); ++j)
        if (j == i || g.gain(j, i) * ctrl_power / g.noise(i) > gamma_bar) out.push_back(j);
    return out;
}

struct HeardEntry {
    Announcement value;
    double timestamp = 0.0;
    bool heard = false;
};

// Everything transmitter i knows: its own power, the last packet heard from
// each link, and (NI-GLAD) the links it listens to.
struct LinkState {
    std::size_t id = 0;
    double own_power = 0.0;
    std::vector<HeardEntry> heard;
    std::vector<Announcement> announced;  // heard[j].value, contiguous
    std::vector<double> interference;     // last reported I_j + n_j, initially the noise floor
    std::vector<double> noise_floor;
    std::vector<std::size_t> neighborhood;

    LinkState() = default;
    LinkState(std::size_t self, double power, std::span<const double> noise,
              std::vector<std::size_t> hood)
        : id(self), own_power(power), heard(noise.size()), announced(noise.size()),
          interference(noise.begin(), noise.end()), noise_floor(noise.begin(), noise.end()),
          neighborhood(std::move(hood)) {}

    bool listens_to(std::size_t j) const {
        return std::binary_search(neighborhood.begin(), neighborhood.end(), j);
    }

    void receive(const ControlPacket& pkt) {
        heard[pkt.sender] = {{pkt.gamma, pkt.signal_power}, pkt.timestamp, true};
        announced[pkt.sender] = {pkt.gamma, pkt.signal_power};
        if (pkt.interference > 0.0) {
            interference[pkt.sender] = pkt.interference;
        } else if (pkt.gamma > 0.0) {
            interference[pkt.sender] = pkt.signal_power / pkt.gamma;
        }
    }
};

struct Epoch {
    double time = 0.0;
    std::size_t link = 0;
    friend bool operator==(const Epoch&, const Epoch&) = default;
    // Later epochs compare greater; equal times are ordered by link id.
    friend bool operator>(const Epoch& a, const Epoch& b) {
        return a.time != b.time ? a.time > b.time : a.link > b.link;
    }
};

// Merged update epochs of M independent Poisson processes.
class EpochScheduler {
public:
    EpochScheduler(std::size_t links, double rate, Rng rng) : rate_(rate), rng_(rng) {
        if (!(rate > 0.0)) throw EngineError("epoch rate must be positive");
        for (std::size_t i = 0; i < links; ++i) queue_.push({rng_.exponential(rate_), i});
    }

    Epoch next() {
        const Epoch e = queue_.top();
        queue_.pop();
        queue_.push({e.time + rng_.exponential(rate_), e.link});
        return e;
    }

    const Epoch& peek() const { return queue_.top(); }

private:
    double rate_;
    Rng rng_;
    std::priority_queue<Epoch, std::vector<Epoch>, std::greater<>> queue_;
};

// Run length: a number of update events, a simulated duration, or both
// (whichever ends first).
struct Horizon {
    std::optional<std::size_t> events;
    std::optional<double> seconds;
};

inline std::vector<Epoch> schedule(std::size_t links, double rate, Horizon horizon, Rng& rng) {
    if (!horizon.events && !horizon.seconds) throw EngineError("horizon needs an event count or duration");
    EpochScheduler sched(links, rate, rng.split(0));
    std::vector<Epoch> out;
    while (!horizon.events || out.size() < *horizon.events) {
        if (horizon.seconds && sched.peek().time > *horizon.seconds) break;
        out.push_back(sched.next());
    }
    return out;
}

struct GridSpec {
    enum class Kind { discrete, continuous };
    Kind kind = Kind::discrete;
    std::size_t count = 4;  // levels per link, or quadrature points

    static GridSpec discrete(std::size_t levels) { return {Kind::discrete, levels}; }
    static GridSpec continuous(std::size_t points = kDefaultQuadraturePoints) {
        return {Kind::continuous, points};
    }
    bool is_discrete() const { return kind == Kind::discrete; }
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct SimConfig {
    Variant variant = Variant::glad_discrete;
    Temperature beta = Temperature(1.0);
    GridSpec grid = GridSpec::discrete(4);
    double rate = 1.0;
    Horizon horizon{1000, std::nullopt};
    std::uint64_t seed = 1;
    double gamma_bar = 0.0;                 // linear, NI-GLAD only
    std::optional<double> ctrl_power;       // default: max over P_max
    std::size_t record_every = 1;
    bool keep_packet_log = false;

    void validate() const {
        if (variant == Variant::glad_discrete && !grid.is_discrete())
            throw EngineError("glad-discrete needs a discrete grid");
        if (variant == Variant::glad_continuous && grid.is_discrete())
            throw EngineError("glad-continuous needs a continuous grid");
        if (grid.is_discrete() && grid.count < 2) throw EngineError("discrete grid needs >= 2 levels");
        if (!grid.is_discrete() && grid.count < kMinQuadraturePoints)
            throw EngineError("continuous grid needs >= 16 quadrature points");
        if (!(rate > 0.0)) throw EngineError("rate must be positive");
        if (!horizon.events && !horizon.seconds) throw EngineError("horizon needs an event count or duration");
        if (!(gamma_bar >= 0.0)) throw EngineError("gamma_bar must be nonnegative");
        if (record_every == 0) throw EngineError("record_every must be >= 1");
    }
};

struct TraceRecord {
    double time = 0.0;
    long link = -1;  // -1 for the initial record
    double power = 0.0;
    PowerVector powers;
    SinrVector sinr;
    double utility = 0.0;
    std::uint64_t broadcasts = 0;
    std::uint64_t processed = 0;
};

struct SimTrace {
    std::vector<TraceRecord> records;
    std::uint64_t events = 0;
    std::uint64_t initial_broadcasts = 0;
    double mean_neighborhood = 0.0;
};

// Picks link i's next power from its local view alone. Pure in everything
// but the rng.
inline double choose_power(const LinkState& view, const GainMatrix& g, const Utility& u,
                           const SimConfig& cfg, Rng& rng) {
    const std::size_t i = view.id;
    const bool restricted = cfg.variant == Variant::niglad;
    const std::span<const std::size_t> subset =
        restricted ? std::span<const std::size_t>(view.neighborhood) : std::span<const std::size_t>();
    CandidateEstimator est{i,
                           view.own_power,
                           view.announced,
                           view.interference,
                           view.noise_floor,
                           g.row(i),
                           subset};
    if (cfg.grid.is_discrete()) {
        const PowerGrid grid(std::vector<std::size_t>(g.size(), cfg.grid.count),
                             std::vector<double>(g.max_power().begin(), g.max_power().end()));
        std::vector<SinrVector> cands(grid.levels(i));
        for (std::size_t k = 0; k < cands.size(); ++k) cands[k] = est(grid.level(i, k));
        return sample(discrete_update(i, cfg.beta, grid, cands, u, subset), rng);
    }
    return sample(continuous_update(g.max_power(i), cfg.beta, cfg.grid.count, est, u, subset), rng);
}

// Asynchronous event loop. Ground truth (the power vector) lives here only;
// links see each other exclusively through delivered control packets.
class Simulator {
public:
    Simulator(GainMatrix g, Utility u, SimConfig cfg)
        : g_(std::move(g)), u_(std::move(u)), cfg_(std::move(cfg)), root_(cfg_.seed),
          epochs_(g_.size(), cfg_.rate, root_.split(1)), pick_(root_.split(2)) {
        cfg_.validate();
        const std::size_t m = g_.size();
        Rng init = root_.split(3);
        powers_.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            if (cfg_.grid.is_discrete()) {
                const double step = g_.max_power(i) / static_cast<double>(cfg_.grid.count - 1);
                const std::size_t k = init.index(cfg_.grid.count);
                powers_[i] = k + 1 == cfg_.grid.count ? g_.max_power(i) : static_cast<double>(k) * step;
            } else {
                powers_[i] = init.uniform(0.0, g_.max_power(i));
            }
        }
        const double ctrl = cfg_.ctrl_power.value_or(
            *std::max_element(g_.max_power().begin(), g_.max_power().end()));
        double hood_total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<std::size_t> hood;
            if (cfg_.variant == Variant::niglad) {
                hood = compute_neighborhood(i, g_, ctrl, cfg_.gamma_bar);
            } else {
                hood.resize(m);
                for (std::size_t j = 0; j < m; ++j) hood[j] = j;
            }
            hood_total += static_cast<double>(hood.size());
            links_.emplace_back(i, powers_[i], g_.noise(), std::move(hood));
        }
        mean_neighborhood_ = hood_total / static_cast<double>(m);
        refresh_truth();
        for (std::size_t j = 0; j < m; ++j) deliver(make_packet(j, 0.0));
        initial_broadcasts_ = m;
    }

    const GainMatrix& gains() const { return g_; }
    const PowerVector& powers() const { return powers_; }
    const SinrVector& true_sinr() const { return sinr_; }
    double utility() const { return utility_; }
    const LinkState& link_state(std::size_t i) const { return links_.at(i); }
    const std::vector<ControlPacket>& packet_log() const { return log_; }
    std::uint64_t broadcasts() const { return broadcasts_; }
    std::uint64_t processed() const { return processed_; }
    double mean_neighborhood() const { return mean_neighborhood_; }
    double now() const { return now_; }

    TraceRecord snapshot(long link) const {
        return {now_, link, link >= 0 ? powers_[static_cast<std::size_t>(link)] : 0.0,
                powers_, sinr_, utility_, broadcasts_, processed_};
    }

    struct StepOutcome {
        Epoch epoch;
        double new_power = 0.0;
        std::size_t broadcasts = 0;
    };

    // Processes the next update epoch.
    StepOutcome step() {
        const Epoch e = epochs_.next();
        now_ = e.time;
        const double p = choose_power(links_[e.link], g_, u_, cfg_, pick_);
        return {e, p, apply_update(e.link, p, e.time)};
    }

    // Sets link i's power and runs the broadcast round it triggers; returns
    // the number of packets broadcast.
    std::size_t apply_update(std::size_t i, double p_new, double time) {
        if (!(p_new >= 0.0) || p_new > g_.max_power(i)) throw EngineError("sampled power infeasible");
        powers_[i] = p_new;
        links_[i].own_power = p_new;
        refresh_truth();
        std::size_t sent = 0;
        for (std::size_t j = 0; j < g_.size(); ++j) {
            ChangeEvent ev;
            if (j == i) {
                ev = ChangeEvent::own_update;
            } else if (g_.gain(i, j) > 0.0) {
                ev = ChangeEvent::sensed_sinr_change;
            } else {
                continue;
            }
            if (!broadcast_rule(cfg_.variant, ev)) continue;
            processed_ += deliver(make_packet(j, time));
            ++sent;
        }
        broadcasts_ += sent;
        return sent;
    }

    SimTrace run() {
        SimTrace trace;
        trace.records.push_back(snapshot(-1));
        const auto& h = cfg_.horizon;
        std::uint64_t n = 0;
        while (!h.events || n < *h.events) {
            if (h.seconds && epochs_.peek().time > *h.seconds) break;
            const auto out = step();
            ++n;
            if (n % cfg_.record_every == 0) trace.records.push_back(snapshot(static_cast<long>(out.epoch.link)));
        }
        trace.events = n;
        trace.initial_broadcasts = initial_broadcasts_;
        trace.mean_neighborhood = mean_neighborhood_;
        return trace;
    }

private:
    void refresh_truth() {
        sinr_ = sinr(g_, powers_);
        utility_ = u_.evaluate(sinr_);
    }

    ControlPacket make_packet(std::size_t j, double time) const {
        return {j, sinr_[j], g_.gain(j, j) * powers_[j], time, interference_plus_noise(g_, powers_, j)};
    }

    // Hands the packet to every transmitter that listens to its sender;
    // returns how many processed it.
    std::size_t deliver(const ControlPacket& pkt) {
        if (cfg_.keep_packet_log) log_.push_back(pkt);
        std::size_t n = 0;
        for (auto& ls : links_) {
            if (!ls.listens_to(pkt.sender)) continue;
            ls.receive(pkt);
            ++n;
        }
        return n;
    }

    GainMatrix g_;
    Utility u_;
    SimConfig cfg_;
    Rng root_;
    EpochScheduler epochs_;
    Rng pick_;
    PowerVector powers_;
    SinrVector sinr_;
    double utility_ = 0.0;
    std::vector<LinkState> links_;
    std::vector<ControlPacket> log_;
    std::uint64_t broadcasts_ = 0;
    std::uint64_t processed_ = 0;
    std::uint64_t initial_broadcasts_ = 0;
    double mean_neighborhood_ = 0.0;
    double now_ = 0.0;
};

inline SimTrace run(const GainMatrix& g, const Utility& u, const SimConfig& cfg) {
    return Simulator(g, u, cfg).run();
}

struct TailStats {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t samples = 0;
};

// Mean and (population) variance of the utility over the last `fraction`
// of the event records. Falls back to the initial record for empty runs.
inline TailStats tail_stats(const SimTrace& trace, double fraction = 0.5) {
    if (trace.records.empty()) return {};
    if (!(fraction > 0.0 && fraction <= 1.0)) throw EngineError("tail fraction must be in (0, 1]");
    const std::size_t events = trace.records.size() - 1;
    if (events == 0) return {trace.records.front().utility, 0.0, 1};
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(events))));
    TailStats s;
    s.samples = n;
    const std::size_t first = trace.records.size() - n;
    for (std::size_t k = first; k < trace.records.size(); ++k) s.mean += trace.records[k].utility;
    s.mean /= static_cast<double>(n);
    for (std::size_t k = first; k < trace.records.size(); ++k) {
        const double d = trace.records[k].utility - s.mean;
        s.variance += d * d;
    }
    s.variance /= static_cast<double>(n);
    return s;
}

}  // namespace glad
