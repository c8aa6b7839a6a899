#include "dbsync/commands.hpp"
#include "dbsync/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> h;
    std::optional<double> duration;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    cmd->set_help_flag("--help", "print this help message and exit");  // frees --h
    cmd->add_option("--config", args.config_path, "scenario config file")
        ->required(config_required);
    cmd->add_option("--out", args.out, "run directory (default <root>/<scenario name>)");
    auto* seed = cmd->add_option("--seed", "override the scenario seed");
    seed->each([&args](const std::string& v) { args.seed = std::stoull(v); });
    auto* h = cmd->add_option("--h", "override the integration step");
    h->each([&args](const std::string& v) { args.h = std::stod(v); });
    auto* duration = cmd->add_option("--duration", "override the simulation duration");
    duration->each([&args](const std::string& v) { args.duration = std::stod(v); });
}

dbsync::ScenarioConfig resolve(const CommonArgs& args) {
    dbsync::ScenarioConfig cfg = args.config_path.empty()
                                     ? dbsync::demo_scenario()
                                     : dbsync::load_config_file(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.h) cfg.h = *args.h;
    if (args.duration) cfg.duration = *args.duration;
    return cfg;
}

std::string run_dir(const CommonArgs& args, const dbsync::ScenarioConfig& cfg) {
    if (!args.out.empty()) return args.out;
    return dbsync::cli::default_output_root() + "/" + cfg.name;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven synchronization of linear multiagent systems"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);

    CommonArgs collect_args, design_args, simulate_args;
    auto* collect = app.add_subcommand("collect", "run excitation experiments and store data");
    add_common(collect, collect_args, true);
    auto* design = app.add_subcommand("design", "synthesize controllers from collected data");
    add_common(design, design_args, true);
    auto* simulate = app.add_subcommand("simulate", "run the closed loop from design artifacts");
    add_common(simulate, simulate_args, true);

    std::string demo_out;
    std::uint64_t demo_seed = 1;
    int demo_seeds = 1;
    auto* demo = app.add_subcommand("demo",
                                    "collect, design and simulate the bundled demo scenario");
    demo->add_option("--out", demo_out, "output directory (default <root>/demo)");
    demo->add_option("--seed", demo_seed, "base seed");
    demo->add_option("--seeds", demo_seeds, "number of consecutive seeds to run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (collect->parsed()) {
            const auto cfg = resolve(collect_args);
            return dbsync::cli::cmd_collect(cfg, run_dir(collect_args, cfg));
        }
        if (design->parsed()) {
            const auto cfg = resolve(design_args);
            return dbsync::cli::cmd_design(cfg, run_dir(design_args, cfg));
        }
        if (simulate->parsed()) {
            const auto cfg = resolve(simulate_args);
            return dbsync::cli::cmd_simulate(cfg, run_dir(simulate_args, cfg));
        }
        if (demo->parsed()) {
            const std::string out =
                demo_out.empty() ? dbsync::cli::default_output_root() + "/demo" : demo_out;
            return dbsync::cli::cmd_demo(out, demo_seed, demo_seeds);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
