// Command-line front end: run, eval, ablate.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccl/ccl.hpp"

namespace {

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> epochs;
    std::optional<std::string> output;
    std::optional<std::size_t> workers;
    std::optional<std::string> resume;
};

void apply_overrides(ccl::ExperimentConfig& cfg, const RunArgs& a) {
    if (a.seed) cfg.seed = *a.seed;
    if (a.mode) cfg.mode = ccl::run_mode_from(*a.mode);
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.output) cfg.output_dir = *a.output;
    if (a.workers) cfg.learner.workers = *a.workers;
    cfg.validate();
}

int cmd_run(const RunArgs& a) {
    ccl::ExperimentConfig cfg = ccl::load_config(a.config);
    apply_overrides(cfg, a);
    ccl::RunOptions opts;
    if (a.resume) opts.resume_from = *a.resume;
    const ccl::RunSummary s = ccl::run_experiment(cfg, opts);
    const std::uint64_t episodes = s.metrics.empty() ? 0 : s.metrics.back().cumulative_episodes;
    std::printf("mode=%s epochs=%zu episodes=%llu final_target_success=%.4f output=%s\n",
                std::string(ccl::to_string(cfg.mode)).c_str(), s.metrics.size(),
                static_cast<unsigned long long>(episodes), s.final_success, s.output_dir.string().c_str());
    return 0;
}

int cmd_eval(const std::string& snapshot, int episodes, std::optional<std::uint64_t> seed) {
    const ccl::Snapshot snap = ccl::load_snapshot(snapshot);
    ccl::Rng rng(seed.value_or(snap.config.seed));
    const double rate =
        ccl::evaluate_target(snap.policy, snap.config.target_task(), snap.config.env, episodes, rng);
    std::printf("epoch=%llu episodes=%d target_success=%.4f\n", static_cast<unsigned long long>(snap.state.epoch),
                episodes, rate);
    return 0;
}

int cmd_ablate(const RunArgs& a, const std::string& axis_name, const std::vector<std::uint64_t>& seeds,
               std::optional<std::string> report) {
    ccl::ExperimentConfig cfg = ccl::load_config(a.config);
    apply_overrides(cfg, a);
    const auto axis = ccl::ablation_axis_from(axis_name);
    const std::filesystem::path path =
        report ? std::filesystem::path(*report)
               : std::filesystem::path(ccl::resolve_output_dir(cfg.output_dir)) / ("ablation_" + axis_name + ".csv");
    const ccl::AblationReport r = ccl::run_ablation(cfg, axis, seeds, path);
    for (const auto& v : r.variants) {
        std::printf("%-10s seed_mean_final_success=%.4f\n", v.c_str(), r.mean_final(v));
    }
    std::printf("report=%s rows=%zu\n", path.string().c_str(), r.runs.size() * cfg.epochs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Co-evolutionary curriculum learning on a sparse-reward cooperative grid"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("--config", run_args.config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", run_args.seed, "Override the master seed");
    run->add_option("--mode", run_args.mode, "ccl or vanilla");
    run->add_option("--epochs", run_args.epochs, "Override the number of epochs");
    run->add_option("--output", run_args.output, "Output directory");
    run->add_option("--workers", run_args.workers, "Rollout worker threads");
    run->add_option("--resume", run_args.resume, "Resume from a snapshot file")->check(CLI::ExistingFile);

    std::string snapshot;
    int episodes = 0;
    std::optional<std::uint64_t> eval_seed;
    auto* eval = app.add_subcommand("eval", "Greedy evaluation of a snapshot's policy on its target task");
    eval->add_option("--snapshot", snapshot, "Snapshot file (.jsonl)")->required()->check(CLI::ExistingFile);
    eval->add_option("--episodes", episodes, "Evaluation episodes")->required()->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed, "Tie-breaking seed");

    RunArgs ablate_args;
    std::string axis;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::optional<std::string> report;
    auto* ablate = app.add_subcommand("ablate", "Matched-seed ablation along one axis");
    ablate->add_option("--config", ablate_args.config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
    ablate->add_option("--axis", axis, "fitness-shape or mutation-step")
        ->required()
        ->check(CLI::IsMember({"fitness-shape", "mutation-step"}));
    ablate->add_option("--seeds", seeds, "Seeds to run")->delimiter(',');
    ablate->add_option("--report", report, "Report CSV path");
    ablate->add_option("--epochs", ablate_args.epochs, "Override the number of epochs");
    ablate->add_option("--output", ablate_args.output, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_args);
        if (*eval) return cmd_eval(snapshot, episodes, eval_seed);
        if (*ablate) return cmd_ablate(ablate_args, axis, seeds, report);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
