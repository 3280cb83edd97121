#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace glad {

struct UtilityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct LinkSinr {
    std::size_t link = 0;
    double sinr = 0.0;
};

enum class UtilityKind { proportional_fairness, total_throughput, custom_table };

inline const char* to_string(UtilityKind k) {
    switch (k) {
        case UtilityKind::proportional_fairness: return "proportional_fairness";
        case UtilityKind::total_throughput: return "total_throughput";
        case UtilityKind::custom_table: return "custom_table";
    }
    return "?";
}

// How a custom per-link table is combined over a link subset.
enum class Aggregate { sum, product, min };

inline const char* to_string(Aggregate a) {
    switch (a) {
        case Aggregate::sum: return "sum";
        case Aggregate::product: return "product";
        case Aggregate::min: return "min";
    }
    return "?";
}

// Per-link score as a piecewise-linear function of SINR through
// (breakpoint, value) pairs, constant outside the breakpoint range.
// step = true makes it piecewise constant (value of the last breakpoint
// at or below the SINR), which allows discontinuous utilities.
struct UtilityTable {
    std::vector<double> breakpoints;
    std::vector<double> values;
    Aggregate aggregate = Aggregate::sum;
    bool step = false;

    void validate() const {
        if (breakpoints.empty() || breakpoints.size() != values.size())
            throw UtilityError("custom table needs equally many breakpoints and values (>= 1)");
        if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
            std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end())
            throw UtilityError("custom table breakpoints must be strictly increasing");
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw UtilityError("custom table values must be finite and nonnegative");
    }

    double link_value(double sinr) const {
        if (sinr <= breakpoints.front()) return values.front();
        if (sinr >= breakpoints.back()) return values.back();
        const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), sinr);
        const auto hi = static_cast<std::size_t>(it - breakpoints.begin());
        const auto lo = hi - 1;
        if (step) return values[lo];
        const double t = (sinr - breakpoints[lo]) / (breakpoints[hi] - breakpoints[lo]);
        return values[lo] + t * (values[hi] - values[lo]);
    }

    friend bool operator==(const UtilityTable&, const UtilityTable&) = default;
};

// Nonnegative system utility of a SINR vector, defined on any nonempty
// subset of links: the built-ins are the product (proportional fairness)
// or the sum of log2(1 + sinr) (total throughput) over the subset.
class Utility {
public:
    using Function = std::function<double(std::span<const LinkSinr>)>;

    static Utility proportional_fairness() { return Utility(UtilityKind::proportional_fairness); }
    static Utility total_throughput() { return Utility(UtilityKind::total_throughput); }

    static Utility custom(UtilityTable table) {
        table.validate();
        Utility u(UtilityKind::custom_table);
        u.table_ = std::move(table);
        return u;
    }

    // Arbitrary caller-supplied function; it owns its subset semantics.
    // Negative results are rejected at evaluation time.
    static Utility custom(Function fn) {
        Utility u(UtilityKind::custom_table);
        u.fn_ = std::move(fn);
        return u;
    }

    UtilityKind kind() const { return kind_; }
    const UtilityTable* table() const { return fn_ ? nullptr : &table_; }

    double evaluate(std::span<const LinkSinr> subset) const {
        if (subset.empty()) throw UtilityError("utility evaluated on an empty link set");
        double u = 0.0;
        switch (kind_) {
            case UtilityKind::proportional_fairness:
                u = 1.0;
                for (const auto& ls : subset) u *= ls.sinr;
                break;
            case UtilityKind::total_throughput:
                for (const auto& ls : subset) u += std::log2(1.0 + ls.sinr);
                break;
            case UtilityKind::custom_table:
                u = fn_ ? fn_(subset) : evaluate_table(subset);
                break;
        }
        if (!(u >= 0.0)) throw UtilityError("utility must be nonnegative, got " + std::to_string(u));
        return u;
    }

    // Full-vector evaluation with link ids 0..M-1.
    double evaluate(std::span<const double> sinr) const {
        if (kind_ != UtilityKind::custom_table && !sinr.empty())
            return builtin(sinr.size(), [&](std::size_t k) { return sinr[k]; });
        std::vector<LinkSinr> all(sinr.size());
        for (std::size_t j = 0; j < sinr.size(); ++j) all[j] = {j, sinr[j]};
        return evaluate(all);
    }

    // Evaluation restricted to the listed links.
    double evaluate(std::span<const double> sinr, std::span<const std::size_t> links) const {
        if (kind_ != UtilityKind::custom_table && !links.empty())
            return builtin(links.size(), [&](std::size_t k) { return sinr[links[k]]; });
        std::vector<LinkSinr> sub(links.size());
        for (std::size_t k = 0; k < links.size(); ++k) sub[k] = {links[k], sinr[links[k]]};
        return evaluate(sub);
    }

private:
    explicit Utility(UtilityKind k) : kind_(k) {}

    // Same accumulation order as the LinkSinr path, so both give
    // bit-identical results.
    template <typename Get>
    double builtin(std::size_t n, Get get) const {
        double u = 0.0;
        if (kind_ == UtilityKind::proportional_fairness) {
            u = 1.0;
            for (std::size_t k = 0; k < n; ++k) u *= get(k);
        } else {
            for (std::size_t k = 0; k < n; ++k) u += std::log2(1.0 + get(k));
        }
        if (!(u >= 0.0)) throw UtilityError("utility must be nonnegative, got " + std::to_string(u));
        return u;
    }

    double evaluate_table(std::span<const LinkSinr> subset) const {
        switch (table_.aggregate) {
            case Aggregate::sum: {
                double acc = 0.0;
                for (const auto& ls : subset) acc += table_.link_value(ls.sinr);
                return acc;
            }
            case Aggregate::product: {
                double acc = 1.0;
                for (const auto& ls : subset) acc *= table_.link_value(ls.sinr);
                return acc;
            }
            case Aggregate::min: {
                double acc = table_.link_value(subset.front().sinr);
                for (const auto& ls : subset.subspan(1)) acc = std::min(acc, table_.link_value(ls.sinr));
                return acc;
            }
        }
        return 0.0;
    }

    UtilityKind kind_;
    UtilityTable table_;
    Function fn_;
};

}  // namespace glad
