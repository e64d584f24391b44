#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fraglab: growth-fragmentation dynamics laboratory"};
    app.require_subcommand(1);

    fraglab::cli::Options opt;
    app.add_option("--config", opt.config_path, "configuration file (key = value lines)");
    app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", opt.seed, "seed recorded in the manifest");
    app.add_option("--dt", opt.dt_override, "override the time step");
    app.add_option("--grid-n", opt.grid_n_override, "override the grid cell count");
    app.add_flag("--quiet", opt.quiet, "suppress progress output");

    std::vector<std::string> figure_args;
    auto* fig = app.add_subcommand("figure", "reproduce a phase-plane figure (1, 2 or 3)");
    fig->add_option("which", figure_args, "figure number")->expected(1);
    fig->fallthrough();

    for (const char* name : {"eigen", "simulate-pde", "simulate-ode", "steady-states",
                             "hopf-scan", "limit-cycle", "floquet-compare"})
        app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    const std::string sub = app.get_subcommands().front()->get_name();
    return fraglab::cli::run_command(sub, sub == "figure" ? figure_args : std::vector<std::string>{},
                                     opt);
}
