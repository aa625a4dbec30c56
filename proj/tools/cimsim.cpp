// Command-line front end: simulate, sweep, analytic-a, gmps, fit.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cimsim/commands.hpp"
#include "cimsim/config.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::string> format;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<double> eta_max;
};

cim::RunConfig load(const Flags& f) {
    cim::RunConfig c = cim::load_config(f.config);
    if (f.out) c.output_dir = *f.out;
    if (f.format) {
        if (*f.format == "csv") c.format = cim::OutputFormat::Csv;
        else if (*f.format == "json") c.format = cim::OutputFormat::Json;
        else throw cim::ConfigError("--format", "must be csv or json");
    }
    if (f.seed) c.seed = *f.seed;
    if (f.eta_max) c.sweep.eta_max = *f.eta_max;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian simulator for coupled-pulse coherent Ising machines"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "key = value configuration file")->required();
        sub->add_option("--out", flags.out, "output directory (overrides output_dir)");
        sub->add_option("--format", flags.format, "csv or json");
        sub->add_option("--seed", flags.seed, "base seed (overrides seed)");
    };
    CLI::App* simulate = app.add_subcommand("simulate", "run one trajectory of scheme A, B or GMPS");
    CLI::App* sweep = app.add_subcommand("sweep", "steady-state K over a parameter grid");
    CLI::App* analytic = app.add_subcommand("analytic-a", "closed-form scheme A model constants");
    CLI::App* gmps = app.add_subcommand("gmps", "build the GMPS reference state");
    CLI::App* fit = app.add_subcommand("fit", "fit covariance files to the steady-state model");
    for (CLI::App* sub : {simulate, sweep, analytic, gmps, fit}) add_common(sub);
    sweep->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--eta-max", flags.eta_max, "ignore cells above this eta when picking the best cell");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cim::kExitConfig;
    }

    try {
        const cim::RunConfig c = load(flags);
        if (*simulate) return cim::cmd_simulate(c, std::cout);
        if (*sweep) return cim::cmd_sweep(c, flags.jobs, std::cout);
        if (*analytic) return cim::cmd_analytic_a(c, std::cout);
        if (*gmps) return cim::cmd_gmps(c, std::cout);
        return cim::cmd_fit(c, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cim::exit_code_for(e);
    }
}
