// zeroloss <mode> --config <path> [--seed N] [--out DIR] [--set key=value]...
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zeroloss/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Explicit zero-loss constructions, training-Jacobian rank diagnostics and descent experiments"};
    app.require_subcommand(1, 1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<std::string> overrides;

    const std::vector<std::pair<std::string, std::string>> modes = {
        {"construct", "Build an explicit zero-loss parameter setting"},
        {"jacobian-rank", "Compute the training Jacobian and its numerical rank"},
        {"descend", "Run forward-Euler gradient descent with rank monitoring"},
        {"lemma-check", "Random rank trials for the broadcast vectorized tensor product"},
        {"depth-sweep", "Steps-to-threshold across network depths"},
    };
    for (const auto& [name, help] : modes) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Override the configuration seed");
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--set", overrides, "Override a configuration field, e.g. --set dims.M=10")
            ->allow_extra_args(false);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : zeroloss::kExitValidation;
    }

    zeroloss::RunRequest request;
    request.mode = app.get_subcommands().front()->get_name();
    request.config_path = config;
    request.seed = seed;
    if (out) request.out_dir = *out;
    request.overrides = overrides;
    return zeroloss::run_experiment(request, std::cerr);
}
