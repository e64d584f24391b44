#pragma once

#include <string>
#include <vector>

namespace fraglab::cli {

struct Options {
    std::string config_path;  // empty = no config given
    std::string out_dir = ".";
    unsigned seed = 0;
    double dt_override = 0.0;   // 0 = no override
    int grid_n_override = 0;    // 0 = no override
    bool quiet = false;
};

/// Dispatch a subcommand. Returns the process exit code:
///   0 success, 1 config/schema error, 2 assumption-check failure,
///   3 numerical failure.
int run_command(const std::string& subcommand, const std::vector<std::string>& args,
                const Options& opt);

}  // namespace fraglab::cli
