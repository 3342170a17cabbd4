// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: runs experiment spec files, the self-check
// suite, and lists the built-in experiment kinds.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rapsim/experiment.hpp"
#include "rapsim/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitBadSpec = 2;

int cmd_run(const std::string& spec_path, bool seed_set, std::uint64_t seed, int trials,
            const std::string& out, int workers) {
    rapsim::ExperimentSpec spec;
    try {
        spec = rapsim::parse_spec_file(spec_path);
        if (seed_set) spec.master_seed = seed;
        if (trials > 0) spec.num_trials = trials;
        if (!out.empty()) spec.output_path = out;
        spec.validate();
    } catch (const rapsim::SpecError& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return kExitBadSpec;
    }

    if (spec.kind == rapsim::ExperimentKind::kValidate) {
        return rapsim::run_validation() == 0 ? kExitOk : kExitValidationFailure;
    }

    try {
        const auto rows = rapsim::run_experiment_to_csv(spec, workers);
        std::cout << "wrote " << rows.size() << " rows to " << spec.output_path << "\n";
        return kExitOk;
    } catch (const rapsim::SpecError& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return kExitBadSpec;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidationFailure;
    }
}

int cmd_list() {
    std::cout << "sucre_fig3        crowd access: admission and attempt statistics vs K\n"
              << "                  sweep: num_devices; modes: sucre, baseline\n"
              << "erapid_fig4       ergodic pilot hopping: optimized sum-rate bound vs tau_u\n"
              << "                  sweep: slot_length; modes: M=<antennas>\n"
              << "crapid_fig5       framed replicas with SIC vs ALOHA and scheduled bound\n"
              << "                  sweep: num_antennas; modes: <scheme>_R<rate>\n"
              << "validate          run the library self-check suite\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulation of random-access protocols for massive MIMO"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_path;
    std::uint64_t seed = 0;
    int trials = 0;
    int workers = 1;

    CLI::App* run = app.add_subcommand("run", "run an experiment spec file");
    run->add_option("spec", spec_path, "experiment spec file")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed, "master seed override");
    run->add_option("--trials", trials, "trial count override");
    run->add_option("--out", out_path, "output CSV path override");
    run->add_option("--workers", workers, "worker threads (wall time only, never output)")
        ->check(CLI::PositiveNumber);

    CLI::App* validate = app.add_subcommand("validate", "run the self-check suite");
    CLI::App* list = app.add_subcommand("list-experiments", "describe experiment kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitBadSpec;
    }

    if (run->parsed()) {
        return cmd_run(spec_path, seed_opt->count() > 0, seed, trials, out_path, workers);
    }
    if (validate->parsed()) {
        return rapsim::run_validation() == 0 ? kExitOk : kExitValidationFailure;
    }
    if (list->parsed()) return cmd_list();
    return kExitBadSpec;
}
