#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "glad/channel.hpp"
#include "glad/engine.hpp"
#include "glad/sampler.hpp"
#include "glad/utility.hpp"

namespace glad {

struct ConfigError : std::invalid_argument {
    ConfigError(const std::string& field, const std::string& what)
        : std::invalid_argument("config field '" + field + "': " + what), field(field) {}
    std::string field;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct TopologySource {
    enum class Kind { reference, file, generated };
    Kind kind = Kind::reference;
    std::string path;
    std::uint64_t seed = 1;
    std::size_t links = 6;
    double area_side_m = 10.0;
    double min_len_m = 1.0;
    double max_len_m = 2.0;
    friend bool operator==(const TopologySource&, const TopologySource&) = default;
};

// A beta value: finite, infinite, or a multiple of the brute-force optimum
// U* (resolved once the network is known).
struct BetaSpec {
    double value = 1.0;
    bool infinite = false;
    bool relative = false;  // value is a multiple of U*
    friend bool operator==(const BetaSpec&, const BetaSpec&) = default;

    Temperature resolve(std::optional<double> optimum) const {
        if (infinite) return Temperature::infinite();
        if (!relative) return Temperature(value);
        if (!optimum) throw ConfigError("beta", "times_optimum needs a discrete grid within the enumeration cap");
        return Temperature(value * *optimum);
    }

    std::string label() const {
        if (infinite) return "inf";
        std::ostringstream os;
        os << std::setprecision(std::numeric_limits<double>::max_digits10) << value;
        return relative ? os.str() + "*U*" : os.str();
    }
};

struct UtilitySpec {
    UtilityKind kind = UtilityKind::total_throughput;
    UtilityTable table;
    friend bool operator==(const UtilitySpec&, const UtilitySpec&) = default;

    Utility make() const {
        switch (kind) {
            case UtilityKind::proportional_fairness: return Utility::proportional_fairness();
            case UtilityKind::total_throughput: return Utility::total_throughput();
            case UtilityKind::custom_table: return Utility::custom(table);
        }
        return Utility::total_throughput();
    }
};

struct ExperimentConfig {
    TopologySource topology;
    double max_power_mw = 1.0;
    double noise_uw = 0.1;
    GridSpec grid = GridSpec::discrete(4);
    UtilitySpec utility;
    std::vector<Variant> variants{Variant::glad_discrete};
    std::vector<BetaSpec> betas{BetaSpec{}};
    // dB values; nullopt switches the NI-GLAD filter off (linear threshold 0).
    std::vector<std::optional<double>> gamma_bar_db{std::nullopt};
    std::optional<double> ctrl_power_mw;
    std::size_t events = 10000;
    double rate = 1.0;
    std::vector<std::uint64_t> seeds{1};
    double tail_fraction = 0.5;
    std::size_t record_every = 1;
    bool per_link_columns = false;
    std::size_t chain_cap = kSpectralStateCapDefault;
    std::size_t mixing_steps = 200;
    std::string output = "out";

    static constexpr std::size_t kSpectralStateCapDefault = 4096;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    RadioParams radio() const { return {max_power_mw * 1e-3, noise_uw * 1e-6}; }

    GainMatrix network() const {
        switch (topology.kind) {
            case TopologySource::Kind::reference: return reference_network(radio());
            case TopologySource::Kind::generated:
                return generate_topology(topology.seed, topology.links, topology.area_side_m, topology.min_len_m,
                                         topology.max_len_m, radio())
                    .second;
            case TopologySource::Kind::file: {
                std::ifstream in(topology.path);
                if (!in) throw ConfigError("topology.path", "cannot open '" + topology.path + "'");
                return read_gain_matrix(in);
            }
        }
        throw ConfigError("topology", "unknown source");
    }

    void validate() const {
        if (variants.empty()) throw ConfigError("variants", "at least one variant required");
        for (auto v : variants) {
            if (v == Variant::glad_discrete && !grid.is_discrete())
                throw ConfigError("grid", "glad-discrete needs {\"levels\": L}");
            if (v == Variant::glad_continuous && grid.is_discrete())
                throw ConfigError("grid", "glad-continuous needs {\"continuous\": N}");
        }
        if (grid.is_discrete() && grid.count < 2) throw ConfigError("grid.levels", "must be >= 2");
        if (!grid.is_discrete() && grid.count < kMinQuadraturePoints)
            throw ConfigError("grid.continuous", "must be >= 16");
        if (!(max_power_mw > 0.0)) throw ConfigError("max_power_mw", "must be positive");
        if (!(noise_uw > 0.0)) throw ConfigError("noise_uw", "must be positive");
        if (betas.empty()) throw ConfigError("beta", "at least one value required");
        for (const auto& b : betas)
            if (!b.infinite && !(b.value >= 0.0)) throw ConfigError("beta", "must be nonnegative");
        if (gamma_bar_db.empty()) throw ConfigError("gamma_bar_db", "at least one value (or null) required");
        if (ctrl_power_mw && !(*ctrl_power_mw > 0.0)) throw ConfigError("ctrl_power_mw", "must be positive");
        if (!(rate > 0.0)) throw ConfigError("rate", "must be positive");
        if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
        if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ConfigError("tail_fraction", "must be in (0, 1]");
        if (record_every == 0) throw ConfigError("record_every", "must be >= 1");
        if (topology.kind == TopologySource::Kind::generated) {
            if (topology.links == 0) throw ConfigError("topology.links", "must be >= 1");
            if (!(topology.area_side_m > 0.0)) throw ConfigError("topology.area_side_m", "must be positive");
            if (!(topology.min_len_m > 0.0) || topology.max_len_m < topology.min_len_m)
                throw ConfigError("topology.link_length_m", "need 0 < min <= max");
        }
        if (output.empty()) throw ConfigError("output", "must be a directory path");
    }
};

namespace detail {

using nlohmann::json;

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path, e.what());
    }
}

inline BetaSpec beta_from_json(const json& j) {
    BetaSpec b;
    if (j.is_number()) {
        b.value = j.get<double>();
    } else if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s != "inf" && s != "infinity") throw ConfigError("beta", "string value must be \"inf\"");
        b.infinite = true;
        b.value = 0.0;
    } else if (j.is_object() && j.contains("times_optimum")) {
        b.relative = true;
        b.value = get_field<double>(j, "times_optimum", "beta.times_optimum");
    } else {
        throw ConfigError("beta", "expected a number, \"inf\" or {\"times_optimum\": k}");
    }
    return b;
}

inline json beta_to_json(const BetaSpec& b) {
    if (b.infinite) return "inf";
    if (b.relative) return json{{"times_optimum", b.value}};
    return b.value;
}

inline Aggregate parse_aggregate(const std::string& s) {
    if (s == "sum") return Aggregate::sum;
    if (s == "product") return Aggregate::product;
    if (s == "min") return Aggregate::min;
    throw ConfigError("utility.aggregate", "expected sum, product or min");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::get_field;
    using nlohmann::json;
    if (!j.is_object()) throw ConfigError("<root>", "expected an object");
    ExperimentConfig c;

    if (j.contains("topology")) {
        const auto& t = j.at("topology");
        const auto src = get_field<std::string>(t, "source", "topology.source");
        if (src == "reference") {
            c.topology.kind = TopologySource::Kind::reference;
        } else if (src == "file") {
            c.topology.kind = TopologySource::Kind::file;
            c.topology.path = get_field<std::string>(t, "path", "topology.path");
        } else if (src == "generated") {
            c.topology.kind = TopologySource::Kind::generated;
            c.topology.seed = get_field<std::uint64_t>(t, "seed", "topology.seed");
            c.topology.links = get_field<std::size_t>(t, "links", "topology.links");
            c.topology.area_side_m = get_field<double>(t, "area_side_m", "topology.area_side_m");
            const auto len = get_field<std::vector<double>>(t, "link_length_m", "topology.link_length_m");
            if (len.size() != 2) throw ConfigError("topology.link_length_m", "expected [min, max]");
            c.topology.min_len_m = len[0];
            c.topology.max_len_m = len[1];
        } else {
            throw ConfigError("topology.source", "expected reference, file or generated");
        }
    }
    if (j.contains("max_power_mw")) c.max_power_mw = get_field<double>(j, "max_power_mw", "max_power_mw");
    if (j.contains("noise_uw")) c.noise_uw = get_field<double>(j, "noise_uw", "noise_uw");

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (g.contains("levels")) {
            c.grid = GridSpec::discrete(get_field<std::size_t>(g, "levels", "grid.levels"));
        } else if (g.contains("continuous")) {
            c.grid = GridSpec::continuous(get_field<std::size_t>(g, "continuous", "grid.continuous"));
        } else {
            throw ConfigError("grid", "expected {\"levels\": L} or {\"continuous\": N}");
        }
    }

    if (j.contains("utility")) {
        const auto& u = j.at("utility");
        const auto kind = get_field<std::string>(u, "kind", "utility.kind");
        if (kind == "proportional_fairness") {
            c.utility.kind = UtilityKind::proportional_fairness;
        } else if (kind == "total_throughput") {
            c.utility.kind = UtilityKind::total_throughput;
        } else if (kind == "custom_table") {
            c.utility.kind = UtilityKind::custom_table;
            c.utility.table.breakpoints = get_field<std::vector<double>>(u, "breakpoints", "utility.breakpoints");
            c.utility.table.values = get_field<std::vector<double>>(u, "values", "utility.values");
            if (u.contains("aggregate"))
                c.utility.table.aggregate =
                    detail::parse_aggregate(get_field<std::string>(u, "aggregate", "utility.aggregate"));
            if (u.contains("step")) c.utility.table.step = get_field<bool>(u, "step", "utility.step");
            try {
                c.utility.table.validate();
            } catch (const UtilityError& e) {
                throw ConfigError("utility", e.what());
            }
        } else {
            throw ConfigError("utility.kind", "expected proportional_fairness, total_throughput or custom_table");
        }
    }

    auto variant_of = [](const json& v) {
        try {
            return parse_variant(v.get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError("variant", e.what());
        }
    };
    if (j.contains("variants")) {
        c.variants.clear();
        for (const auto& v : j.at("variants")) c.variants.push_back(variant_of(v));
    } else if (j.contains("variant")) {
        c.variants = {variant_of(j.at("variant"))};
    }

    if (j.contains("beta")) {
        const auto& b = j.at("beta");
        c.betas.clear();
        if (b.is_array()) {
            for (const auto& x : b) c.betas.push_back(detail::beta_from_json(x));
        } else {
            c.betas.push_back(detail::beta_from_json(b));
        }
    }

    if (j.contains("gamma_bar_db")) {
        const auto& g = j.at("gamma_bar_db");
        c.gamma_bar_db.clear();
        auto one = [](const json& x) -> std::optional<double> {
            if (x.is_null()) return std::nullopt;
            if (!x.is_number()) throw ConfigError("gamma_bar_db", "expected a number (dB) or null");
            return x.get<double>();
        };
        if (g.is_array()) {
            for (const auto& x : g) c.gamma_bar_db.push_back(one(x));
        } else {
            c.gamma_bar_db.push_back(one(g));
        }
    }
    const bool has_ni = std::find(c.variants.begin(), c.variants.end(), Variant::niglad) != c.variants.end();
    if (has_ni && !j.contains("gamma_bar_db"))
        throw ConfigError("gamma_bar_db", "niglad requires a threshold (null switches the filter off)");
    if (j.contains("ctrl_power_mw") && !j.at("ctrl_power_mw").is_null())
        c.ctrl_power_mw = get_field<double>(j, "ctrl_power_mw", "ctrl_power_mw");
    if (j.contains("events")) c.events = get_field<std::size_t>(j, "events", "events");
    if (j.contains("rate")) c.rate = get_field<double>(j, "rate", "rate");
    if (j.contains("seeds")) c.seeds = get_field<std::vector<std::uint64_t>>(j, "seeds", "seeds");
    if (j.contains("tail_fraction")) c.tail_fraction = get_field<double>(j, "tail_fraction", "tail_fraction");
    if (j.contains("record_every")) c.record_every = get_field<std::size_t>(j, "record_every", "record_every");
    if (j.contains("per_link_columns"))
        c.per_link_columns = get_field<bool>(j, "per_link_columns", "per_link_columns");
    if (j.contains("chain_cap")) c.chain_cap = get_field<std::size_t>(j, "chain_cap", "chain_cap");
    if (j.contains("mixing_steps")) c.mixing_steps = get_field<std::size_t>(j, "mixing_steps", "mixing_steps");
    if (j.contains("output")) c.output = get_field<std::string>(j, "output", "output");
    c.validate();
    return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    using nlohmann::json;
    json j;
    switch (c.topology.kind) {
        case TopologySource::Kind::reference: j["topology"] = {{"source", "reference"}}; break;
        case TopologySource::Kind::file: j["topology"] = {{"source", "file"}, {"path", c.topology.path}}; break;
        case TopologySource::Kind::generated:
            j["topology"] = {{"source", "generated"},
                             {"seed", c.topology.seed},
                             {"links", c.topology.links},
                             {"area_side_m", c.topology.area_side_m},
                             {"link_length_m", {c.topology.min_len_m, c.topology.max_len_m}}};
            break;
    }
    j["max_power_mw"] = c.max_power_mw;
    j["noise_uw"] = c.noise_uw;
    j["grid"] = c.grid.is_discrete() ? json{{"levels", c.grid.count}} : json{{"continuous", c.grid.count}};
    json u{{"kind", to_string(c.utility.kind)}};
    if (c.utility.kind == UtilityKind::custom_table) {
        u["breakpoints"] = c.utility.table.breakpoints;
        u["values"] = c.utility.table.values;
        u["aggregate"] = to_string(c.utility.table.aggregate);
        u["step"] = c.utility.table.step;
    }
    j["utility"] = u;
    j["variants"] = json::array();
    for (auto v : c.variants) j["variants"].push_back(to_string(v));
    j["beta"] = json::array();
    for (const auto& b : c.betas) j["beta"].push_back(detail::beta_to_json(b));
    j["gamma_bar_db"] = json::array();
    for (const auto& g : c.gamma_bar_db) j["gamma_bar_db"].push_back(g ? json(*g) : json(nullptr));
    j["ctrl_power_mw"] = c.ctrl_power_mw ? json(*c.ctrl_power_mw) : json(nullptr);
    j["events"] = c.events;
    j["rate"] = c.rate;
    j["seeds"] = c.seeds;
    j["tail_fraction"] = c.tail_fraction;
    j["record_every"] = c.record_every;
    j["per_link_columns"] = c.per_link_columns;
    j["chain_cap"] = c.chain_cap;
    j["mixing_steps"] = c.mixing_steps;
    j["output"] = c.output;
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

}  // namespace glad
