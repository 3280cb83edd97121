#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "glad/experiment.hpp"

namespace {

struct Args {
    std::string config;
    std::string out;
    std::uint64_t seed_offset = 0;
};

int dispatch(const std::string& verb, const Args& a) {
    const auto cfg = glad::load_config(a.config);
    glad::RunOptions opt;
    opt.out_dir = a.out.empty() ? cfg.output : a.out;
    opt.seed_offset = a.seed_offset;
    opt.log = &std::cerr;

    glad::ExperimentOutcome out;
    if (verb == "analyze") {
        out = glad::analyze(cfg, opt);
    } else {
        const auto mode = verb == "run"     ? glad::RunMode::single
                          : verb == "sweep" ? glad::RunMode::sweep
                                            : glad::RunMode::compare;
        out = glad::run_experiment(cfg, mode, opt);
    }
    if (out.optimum) std::cout << "optimum utility (lattice): " << glad::fmt(out.optimum->utility) << '\n';
    for (const auto& r : out.cells) {
        std::cout << glad::to_string(r.cell.variant) << " beta=" << r.cell.beta_spec.label();
        if (r.cell.variant == glad::Variant::niglad)
            std::cout << " gamma_bar_db=" << (r.cell.gamma_bar_db ? glad::fmt(*r.cell.gamma_bar_db) : "off");
        std::cout << " seed=" << r.cell.seed << "  tail mean=" << r.tail.mean << " var=" << r.tail.variance
                  << " broadcasts=" << r.broadcasts << '\n';
    }
    std::cout << "wrote " << out.files.size() << " files to " << opt.out_dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glad: Gibbs-sampling distributed power control simulator"};
    app.require_subcommand(1);
    Args args;
    for (const char* verb : {"run", "sweep", "compare", "analyze"}) {
        auto* sub = app.add_subcommand(verb);
        sub->add_option("--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory (overrides config)");
        sub->add_option("--seed-offset", args.seed_offset, "added to every seed");
    }
    app.get_subcommand("run")->description("first variant, first beta, every seed");
    app.get_subcommand("sweep")->description("first variant over every beta / gamma_bar / seed");
    app.get_subcommand("compare")->description("every variant; writes comparison.csv");
    app.get_subcommand("analyze")->description("exact chain analysis (discrete grid only)");

    CLI11_PARSE(app, argc, argv);
    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        return dispatch(verb, args);
    } catch (const glad::ConfigError& e) {
        std::cerr << "glad: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "glad: " << e.what() << '\n';
        return 1;
    }
}
