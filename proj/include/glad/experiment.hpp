#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "glad/chain.hpp"
#include "glad/config.hpp"
#include "glad/engine.hpp"

namespace glad {

inline constexpr const char* kTraceSchema = "# schema: glad-trace v1";
inline constexpr const char* kSummarySchema = "# schema: glad-summary v1";
inline constexpr const char* kCompareSchema = "# schema: glad-compare v1";
inline constexpr const char* kAnalysisSchema = "# schema: glad-analysis v1";
inline constexpr const char* kMixingSchema = "# schema: glad-mixing v1";

inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    return os.str();
}

inline void write_trace_csv(std::ostream& os, const SimTrace& trace, bool per_link) {
    os << kTraceSchema << '\n' << "time,link,power,utility,broadcasts,processed";
    const std::size_t m = trace.records.empty() ? 0 : trace.records.front().powers.size();
    if (per_link) {
        for (std::size_t i = 0; i < m; ++i) os << ",p" << i;
        for (std::size_t i = 0; i < m; ++i) os << ",sinr" << i;
    }
    os << '\n';
    for (const auto& r : trace.records) {
        os << fmt(r.time) << ',' << r.link << ',' << fmt(r.power) << ',' << fmt(r.utility) << ',' << r.broadcasts
           << ',' << r.processed;
        if (per_link) {
            for (double p : r.powers) os << ',' << fmt(p);
            for (double s : r.sinr) os << ',' << fmt(s);
        }
        os << '\n';
    }
}

inline std::string summary_block(const SimTrace& trace, double tail_fraction) {
    const auto st = tail_stats(trace, tail_fraction);
    const auto& last = trace.records.back();
    std::ostringstream os;
    os << "events: " << trace.events << '\n'
       << "tail window: last " << st.samples << " records (" << tail_fraction * 100.0 << "%)\n"
       << "tail mean utility: " << fmt(st.mean) << '\n'
       << "tail utility variance: " << fmt(st.variance) << '\n'
       << "broadcasts: " << last.broadcasts << " (+" << trace.initial_broadcasts << " initial)\n"
       << "packets processed: " << last.processed << '\n'
       << "mean neighborhood size: " << fmt(trace.mean_neighborhood) << '\n';
    return os.str();
}

// One simulation: a (variant, beta, gamma_bar, seed) combination.
struct Cell {
    Variant variant = Variant::glad_discrete;
    std::size_t beta_index = 0;
    BetaSpec beta_spec;
    Temperature beta;
    std::optional<double> gamma_bar_db;
    std::uint64_t seed = 1;
};

struct CellResult {
    Cell cell;
    TailStats tail;
    std::uint64_t events = 0;
    std::uint64_t broadcasts = 0;
    std::uint64_t processed = 0;
    double mean_neighborhood = 0.0;
    std::string trace_file;
};

inline std::string cell_name(const Cell& c, std::size_t gamma_index) {
    std::ostringstream os;
    os << "trace_" << to_string(c.variant) << "_b" << c.beta_index;
    if (c.variant == Variant::niglad) os << "_g" << gamma_index;
    os << "_s" << c.seed << ".csv";
    return os.str();
}

inline SimConfig sim_config_for(const ExperimentConfig& cfg, const Cell& c) {
    SimConfig s;
    s.variant = c.variant;
    s.beta = c.beta;
    s.grid = cfg.grid;
    s.rate = cfg.rate;
    s.horizon = {cfg.events, std::nullopt};
    s.seed = c.seed;
    s.gamma_bar = c.gamma_bar_db ? db_to_linear(*c.gamma_bar_db) : 0.0;
    if (cfg.ctrl_power_mw) s.ctrl_power = *cfg.ctrl_power_mw * 1e-3;
    s.record_every = cfg.record_every;
    return s;
}

// Runs the cells (in parallel, each single-threaded) and writes one trace
// CSV per cell into `dir`. Results come back in cell order.
inline std::vector<CellResult> run_cells(const ExperimentConfig& cfg, const GainMatrix& g, const Utility& u,
                                         const std::vector<Cell>& cells, const std::filesystem::path& dir,
                                         const std::vector<std::size_t>& gamma_index) {
    std::vector<CellResult> out(cells.size());
    auto work = [&](std::size_t k) {
        const auto& c = cells[k];
        const auto trace = run(g, u, sim_config_for(cfg, c));
        CellResult r;
        r.cell = c;
        r.tail = tail_stats(trace, cfg.tail_fraction);
        r.events = trace.events;
        r.broadcasts = trace.records.back().broadcasts;
        r.processed = trace.records.back().processed;
        r.mean_neighborhood = trace.mean_neighborhood;
        r.trace_file = cell_name(c, gamma_index[k]);
        std::ofstream os(dir / r.trace_file);
        write_trace_csv(os, trace, cfg.per_link_columns);
        out[k] = std::move(r);
    };
    const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t base = 0; base < cells.size(); base += threads) {
        std::vector<std::future<void>> batch;
        for (std::size_t k = base; k < std::min(cells.size(), base + threads); ++k)
            batch.push_back(std::async(std::launch::async, work, k));
        for (auto& f : batch) f.get();
    }
    return out;
}

struct AnalysisRow {
    std::string beta_label;
    Temperature beta;
    double mean = 0.0;
    double variance = 0.0;
    double bound = 0.0;
    double prob_optimal = 0.0;
    std::optional<double> lambda2;
};

// Exact chain analysis across the configured betas. lambda2 is filled when
// the lattice is within the spectral cap.
inline std::vector<AnalysisRow> analysis_rows(const ExperimentConfig& cfg, const GainMatrix& g, const Utility& u,
                                              const UtilityLandscape& land) {
    std::vector<AnalysisRow> rows;
    const PowerGrid grid = PowerGrid::uniform(g, cfg.grid.count);
    for (const auto& b : cfg.betas) {
        AnalysisRow r;
        r.beta_label = b.label();
        r.beta = b.resolve(land.best);
        r.mean = mean_utility(land, r.beta);
        r.variance = variance_utility(land, r.beta);
        r.bound = variance_bound(land, r.beta);
        r.prob_optimal = prob_optimal(land, r.beta);
        if (land.space.size() <= cfg.chain_cap && !r.beta.is_infinite())
            r.lambda2 = second_eigenvalue(build_transition_matrix(g, grid, u, r.beta, cfg.chain_cap)).modulus;
        rows.push_back(r);
    }
    return rows;
}

inline void write_analysis_csv(std::ostream& os, const std::vector<AnalysisRow>& rows) {
    os << kAnalysisSchema << '\n' << "beta,mean_utility,variance,variance_bound,prob_optimal,lambda2\n";
    for (const auto& r : rows) {
        os << (r.beta.is_infinite() ? std::string("inf") : fmt(r.beta.value())) << ',' << fmt(r.mean) << ','
           << fmt(r.variance) << ',' << fmt(r.bound) << ',' << fmt(r.prob_optimal) << ','
           << (r.lambda2 ? fmt(*r.lambda2) : std::string()) << '\n';
    }
}

inline void write_mixing_csv(std::ostream& os, const MixingReport& rep) {
    os << kMixingSchema << '\n' << "# lambda2_modulus=" << fmt(rep.spectrum.modulus) << '\n' << "k,tv_distance\n";
    for (std::size_t k = 0; k < rep.tv.size(); ++k) os << k << ',' << fmt(rep.tv[k]) << '\n';
}

struct RunOptions {
    std::filesystem::path out_dir;
    std::uint64_t seed_offset = 0;
    std::ostream* log = nullptr;  // warnings
};

enum class RunMode { single, sweep, compare };

struct ExperimentOutcome {
    std::vector<CellResult> cells;
    std::optional<Optimum> optimum;
    std::vector<std::string> files;
};

inline std::optional<UtilityLandscape> try_landscape(const ExperimentConfig& cfg, const GainMatrix& g,
                                                     const Utility& u, std::ostream* log) {
    if (!cfg.grid.is_discrete()) return std::nullopt;
    try {
        return enumerate_utilities(g, PowerGrid::uniform(g, cfg.grid.count), u, kEnumerationStateCap);
    } catch (const CapExceeded& e) {
        if (log) *log << "warning: chain analysis skipped: " << e.what() << '\n';
        return std::nullopt;
    }
}

// single: first variant, first beta, first gamma_bar, every seed.
// sweep: first variant over every (beta, gamma_bar, seed).
// compare: every variant over every (beta, gamma_bar, seed); gamma_bar
// only varies for niglad.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, RunMode mode, const RunOptions& opt) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    const GainMatrix g = cfg.network();
    const Utility u = cfg.utility.make();
    ExperimentOutcome out;

    const auto land = try_landscape(cfg, g, u, opt.log);
    std::optional<double> best;
    if (land) {
        best = land->best;
        out.optimum = Optimum{land->best, land->optimal_set};
    }

    std::vector<Variant> variants = cfg.variants;
    if (mode != RunMode::compare) variants.resize(1);
    const std::size_t n_beta = mode == RunMode::single ? 1 : cfg.betas.size();
    const std::size_t n_gamma = mode == RunMode::single ? 1 : cfg.gamma_bar_db.size();

    std::vector<Cell> cells;
    std::vector<std::size_t> gamma_index;
    for (auto v : variants) {
        for (std::size_t b = 0; b < n_beta; ++b) {
            const std::size_t gammas = v == Variant::niglad ? n_gamma : 1;
            for (std::size_t gi = 0; gi < gammas; ++gi) {
                for (auto s : cfg.seeds) {
                    Cell c;
                    c.variant = v;
                    c.beta_index = b;
                    c.beta_spec = cfg.betas[b];
                    c.beta = cfg.betas[b].resolve(best);
                    c.gamma_bar_db = v == Variant::niglad ? cfg.gamma_bar_db[gi] : std::nullopt;
                    c.seed = s + opt.seed_offset;
                    cells.push_back(c);
                    gamma_index.push_back(gi);
                }
            }
        }
    }
    out.cells = run_cells(cfg, g, u, cells, opt.out_dir, gamma_index);
    for (const auto& r : out.cells) out.files.push_back(r.trace_file);

    auto gamma_label = [](const std::optional<double>& gdb) { return gdb ? fmt(*gdb) : std::string("off"); };
    {
        std::ofstream os(opt.out_dir / "summary.csv");
        os << kSummarySchema << '\n'
           << "variant,beta,gamma_bar_db,seed,events,tail_mean,tail_variance,broadcasts,processed,"
              "mean_neighborhood,optimum\n";
        for (const auto& r : out.cells) {
            os << to_string(r.cell.variant) << ',' << r.cell.beta_spec.label() << ','
               << (r.cell.variant == Variant::niglad ? gamma_label(r.cell.gamma_bar_db) : std::string()) << ','
               << r.cell.seed << ',' << r.events << ',' << fmt(r.tail.mean) << ',' << fmt(r.tail.variance) << ','
               << r.broadcasts << ',' << r.processed << ',' << fmt(r.mean_neighborhood) << ','
               << (best ? fmt(*best) : std::string()) << '\n';
        }
        out.files.push_back("summary.csv");
    }
    {
        std::ofstream os(opt.out_dir / "summary.txt");
        for (const auto& r : out.cells) {
            os << "[" << to_string(r.cell.variant) << " beta=" << r.cell.beta_spec.label();
            if (r.cell.variant == Variant::niglad) os << " gamma_bar_db=" << gamma_label(r.cell.gamma_bar_db);
            os << " seed=" << r.cell.seed << "]\n"
               << "tail mean utility: " << fmt(r.tail.mean) << '\n'
               << "tail utility variance: " << fmt(r.tail.variance) << '\n'
               << "broadcasts: " << r.broadcasts << '\n'
               << "packets processed: " << r.processed << '\n';
            if (best) os << "optimum (lattice): " << fmt(*best) << '\n';
            os << '\n';
        }
        out.files.push_back("summary.txt");
    }

    if (mode == RunMode::compare) {
        std::ofstream os(opt.out_dir / "comparison.csv");
        os << kCompareSchema << '\n'
           << "variant,gamma_bar_db,beta,seeds,tail_mean,tail_variance,broadcasts,processed,mean_neighborhood\n";
        for (std::size_t k = 0; k < out.cells.size();) {
            const auto& head = out.cells[k].cell;
            std::size_t n = 0;
            double mean = 0, var = 0, bc = 0, pr = 0, hood = 0;
            for (; k < out.cells.size() && out.cells[k].cell.variant == head.variant &&
                   out.cells[k].cell.beta_index == head.beta_index &&
                   out.cells[k].cell.gamma_bar_db == head.gamma_bar_db;
                 ++k, ++n) {
                const auto& r = out.cells[k];
                mean += r.tail.mean;
                var += r.tail.variance;
                bc += static_cast<double>(r.broadcasts);
                pr += static_cast<double>(r.processed);
                hood += r.mean_neighborhood;
            }
            const auto dn = static_cast<double>(n);
            os << to_string(head.variant) << ','
               << (head.variant == Variant::niglad ? gamma_label(head.gamma_bar_db) : std::string()) << ','
               << head.beta_spec.label() << ',' << n << ',' << fmt(mean / dn) << ',' << fmt(var / dn) << ','
               << fmt(bc / dn) << ',' << fmt(pr / dn) << ',' << fmt(hood / dn) << '\n';
        }
        out.files.push_back("comparison.csv");
    }

    if (land) {
        std::ofstream os(opt.out_dir / "analysis.csv");
        write_analysis_csv(os, analysis_rows(cfg, g, u, *land));
        out.files.push_back("analysis.csv");
        std::ofstream ob(opt.out_dir / "optimum.txt");
        ob << "optimum utility: " << fmt(land->best) << '\n' << "optimal states: " << land->optimal_set.size() << '\n';
        for (auto s : land->optimal_set) {
            ob << "state " << s << ":";
            for (double p : land->space.powers(s)) ob << ' ' << fmt(p);
            ob << '\n';
        }
        out.files.push_back("optimum.txt");
    }
    return out;
}

// Exact analysis only: analysis.csv, optimum.txt and (within the spectral
// cap) mixing.csv for the first finite beta, started from the all-zero state.
inline ExperimentOutcome analyze(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    if (!cfg.grid.is_discrete()) throw ConfigError("grid", "analysis needs a discrete grid {\"levels\": L}");
    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    const GainMatrix g = cfg.network();
    const Utility u = cfg.utility.make();
    const PowerGrid grid = PowerGrid::uniform(g, cfg.grid.count);
    const auto land = enumerate_utilities(g, grid, u, kEnumerationStateCap);
    ExperimentOutcome out;
    out.optimum = Optimum{land.best, land.optimal_set};
    {
        std::ofstream os(opt.out_dir / "analysis.csv");
        write_analysis_csv(os, analysis_rows(cfg, g, u, land));
        out.files.push_back("analysis.csv");
    }
    {
        std::ofstream ob(opt.out_dir / "optimum.txt");
        ob << "optimum utility: " << fmt(land.best) << '\n' << "optimal states: " << land.optimal_set.size() << '\n';
        out.files.push_back("optimum.txt");
    }
    const auto finite = std::find_if(cfg.betas.begin(), cfg.betas.end(), [](const BetaSpec& b) { return !b.infinite; });
    if (land.space.size() <= cfg.chain_cap && finite != cfg.betas.end()) {
        const auto chain = analyze_chain(g, grid, u, finite->resolve(land.best), cfg.chain_cap);
        std::vector<double> init(land.space.size(), 0.0);
        init[0] = 1.0;
        std::ofstream os(opt.out_dir / "mixing.csv");
        write_mixing_csv(os, mixing_analysis(chain, init, cfg.mixing_steps));
        out.files.push_back("mixing.csv");
    } else if (opt.log) {
        *opt.log << "warning: mixing analysis skipped (state space " << land.space.size() << " exceeds chain_cap "
                 << cfg.chain_cap << " or no finite beta)\n";
    }
    return out;
}

}  // namespace glad
