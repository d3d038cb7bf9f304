#include <CLI11.hpp>
#include <iostream>

#include "specmim/cli.hpp"

namespace {

using specmim::cli::Overrides;
using specmim::cli::RunConfig;

int dispatch(const std::string& subcommand, const std::string& config_path,
             const Overrides& overrides) {
    using namespace specmim;
    try {
        RunConfig cfg = cli::load_config(config_path, overrides);
        if (subcommand == "simulate") return cli::cmd_simulate(cfg);
        if (subcommand == "predict") return cli::cmd_predict(cfg);
        if (subcommand == "design") return cli::cmd_design(cfg);
        if (subcommand == "threshold") return cli::cmd_threshold(cfg);
        if (subcommand == "oracle-check") return cli::cmd_oracle_check(cfg);
        std::cerr << "unknown subcommand " << subcommand << "\n";
        return cli::kExitConfigError;
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return cli::kExitConfigError;
    } catch (const InvalidDimension& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return cli::kExitConfigError;
    } catch (const Error& err) {
        std::cerr << "solver failure: " << err.what() << "\n";
        return cli::kExitSolverFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral estimators for multi-index models: simulation, asymptotic "
                 "prediction, and preprocessing design"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    int quad_nodes = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON experiment config")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "root seed (overrides config)");
        cmd->add_option("--threads", threads, "worker threads for trials");
        cmd->add_option("--quad-nodes", quad_nodes, "Gauss-Hermite nodes per dimension");
    };

    add_common(app.add_subcommand("simulate", "finite-size experiments over a delta grid"));
    add_common(app.add_subcommand("predict", "asymptotic eigenvalue/overlap curves"));
    add_common(app.add_subcommand("design", "optimal threshold and preprocessing"));
    add_common(app.add_subcommand("threshold", "critical delta for one branch"));
    add_common(app.add_subcommand("oracle-check", "finite-n equivalence test suite"));

    CLI11_PARSE(app, argc, argv);

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--out")) overrides.out_dir = out_dir;
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--threads")) overrides.threads = threads;
    if (sub->count("--quad-nodes")) overrides.quad_nodes = quad_nodes;

    return dispatch(sub->get_name(), config_path, overrides);
}
