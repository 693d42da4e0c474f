#include <iostream>

#include <CLI11.hpp>

#include "planid/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"planid - identification of dynamic sequential plans in causal Bayesian networks"};
    app.require_subcommand(1);

    planid::RunConfig config;

    auto* identify = app.add_subcommand("identify", "decide a plan query and print its estimand");
    identify->add_option("graph", config.graph_path, "graph file")->required();
    identify->add_option("strategy", config.strategy_path, "strategy file")->required();
    identify->add_option("--save-estimand", config.estimand_path, "write the estimand as JSON");

    auto* verify = app.add_subcommand("verify", "identify, then check the estimand against the oracle");
    verify->add_option("graph", config.graph_path, "graph file")->required();
    verify->add_option("strategy", config.strategy_path, "strategy file")->required();
    verify->add_option("--model", config.model_path, "fixed CPT file instead of random models");
    verify->add_option("--trials", config.trials, "number of random models");
    verify->add_option("--seed", config.seed, "base seed");
    verify->add_option("--tolerance", config.tolerance, "max allowed deviation");

    auto* render = app.add_subcommand("render", "pretty-print a saved estimand");
    render->add_option("estimand", config.estimand_path, "estimand JSON file")->required();

    auto* random_test = app.add_subcommand("random-test", "random graphs/strategies vs the oracle");
    random_test->add_option("--trials", config.trials, "number of random queries");
    random_test->add_option("--seed", config.seed, "base seed");
    random_test->add_option("--tolerance", config.tolerance, "max allowed deviation");
    random_test->add_option("--max-observed", config.max_observed, "observed node cap");
    random_test->add_option("--max-latents", config.max_latents, "latent node cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : planid::kExitInputError;
    }

    if (identify->parsed()) config.command = planid::RunConfig::Command::Identify;
    if (verify->parsed()) config.command = planid::RunConfig::Command::Verify;
    if (render->parsed()) config.command = planid::RunConfig::Command::Render;
    if (random_test->parsed()) config.command = planid::RunConfig::Command::RandomTest;

    return planid::run_cli(config, std::cout, std::cerr);
}
