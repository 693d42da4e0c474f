#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace planid {

// Exit codes: 0 identified (and within tolerance for verify), 2 the
// identification criterion failed, 3 verification deviation exceeded the
// tolerance, 4 input error.
enum ExitCode : int {
    kExitOk = 0,
    kExitCriterionFails = 2,
    kExitDeviationExceeded = 3,
    kExitInputError = 4,
};

struct RunConfig {
    enum class Command { Identify, Verify, Render, RandomTest };
    Command command = Command::Identify;

    std::string graph_path;
    std::string strategy_path;
    std::string model_path;     // verify: fixed CPTs instead of random models
    std::string estimand_path;  // render input / identify --save-estimand
    std::uint64_t seed = 0;
    double tolerance = 1e-8;
    int trials = 100;
    int max_observed = 6;
    int max_latents = 3;
};

// Runs one command; the report goes to `out`, diagnostics to `err`.
int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace planid
