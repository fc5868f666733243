#pragma once

// File-level orchestration: metrics CSV, timing CSV, snapshots, resume and
// matched-seed ablations.
//
// metrics.csv columns (fixed order):
//   epoch,target_success,mean_r,mean_f,batch_new,batch_old,cumulative_episodes,cumulative_steps
// timing.csv columns:
//   epoch,wall_seconds
// Wall-clock time is kept out of metrics.csv so that identical runs produce
// identical metrics files.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ccl/config_io.hpp"
#include "ccl/errors.hpp"
#include "ccl/experiment.hpp"
#include "ccl/snapshot.hpp"

namespace ccl {

inline constexpr const char* kMetricsHeader =
    "epoch,target_success,mean_r,mean_f,batch_new,batch_old,cumulative_episodes,cumulative_steps";

inline constexpr const char* kOutputDirEnv = "CCL_OUTPUT_DIR";

inline std::string format_metrics_row(const EpochMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%llu,%.6f,%.6f,%.6f,%zu,%zu,%llu,%llu", static_cast<unsigned long long>(m.epoch),
                  m.target_success, m.mean_r, m.mean_f, m.batch_new, m.batch_old,
                  static_cast<unsigned long long>(m.cumulative_episodes),
                  static_cast<unsigned long long>(m.cumulative_steps));
    return buf;
}

/// Config value, else $CCL_OUTPUT_DIR, else "ccl_runs".
inline std::string resolve_output_dir(const std::string& configured) {
    if (!configured.empty()) return configured;
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
    return "ccl_runs";
}

struct RunOptions {
    std::optional<std::filesystem::path> resume_from;
    bool write_files = true;
};

struct RunSummary {
    std::vector<EpochMetrics> metrics;
    double final_success = 0.0;
    EvolutionCounters counters;
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> snapshots;
};

namespace detail {
inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}
}  // namespace detail

/// Runs (or resumes) an experiment up to `cfg.epochs` completed epochs.
inline RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
    cfg.validate();
    RunSummary summary;

    std::optional<Experiment> exp;
    if (opts.resume_from) {
        Snapshot snap = load_snapshot(*opts.resume_from);
        if (trajectory_relevant(config_to_json(snap.config)) != trajectory_relevant(config_to_json(cfg))) {
            throw ConfigError("snapshot " + opts.resume_from->string() + " was produced by a different configuration");
        }
        if (snap.state.epoch > cfg.epochs) {
            throw ConfigError("snapshot is already past the configured number of epochs");
        }
        exp.emplace(cfg, std::move(snap.state), std::move(snap.policy));
    }

    std::ofstream metrics;
    std::ofstream timing;
    std::filesystem::path snap_dir;
    if (opts.write_files) {
        summary.output_dir = resolve_output_dir(cfg.output_dir);
        std::error_code ec;
        std::filesystem::create_directories(summary.output_dir, ec);
        if (ec) throw ConfigError("cannot create output directory " + summary.output_dir.string() + ": " + ec.message());
        snap_dir = summary.output_dir / "snapshots";
        std::filesystem::create_directories(snap_dir, ec);
        if (ec) throw ConfigError("cannot create snapshot directory " + snap_dir.string() + ": " + ec.message());
        metrics = detail::open_for_write(summary.output_dir / "metrics.csv");
        timing = detail::open_for_write(summary.output_dir / "timing.csv");
        metrics << kMetricsHeader << '\n';
        timing << "epoch,wall_seconds\n";
        detail::open_for_write(summary.output_dir / "config.json") << config_to_json(cfg).dump(2) << '\n';
    }

    if (!exp) exp.emplace(cfg);

    std::uint64_t last_snapshot = ~std::uint64_t{0};
    auto snapshot = [&] {
        if (!opts.write_files) return;
        summary.snapshots.push_back(
            save_snapshot(snap_dir, cfg, exp->state(), exp->learner().policy()));
        last_snapshot = exp->state().epoch;
    };
    if (!opts.resume_from) snapshot();

    while (exp->state().epoch < cfg.epochs) {
        const EpochMetrics m = exp->run_epoch();
        summary.metrics.push_back(m);
        if (opts.write_files) {
            metrics << format_metrics_row(m) << '\n';
            metrics.flush();
            timing << m.epoch << ',' << m.wall_seconds << '\n';
        }
        if (cfg.snapshot_interval > 0 && m.epoch % cfg.snapshot_interval == 0) snapshot();
    }
    if (last_snapshot != exp->state().epoch) snapshot();

    summary.final_success = summary.metrics.empty() ? 0.0 : summary.metrics.back().target_success;
    summary.counters = exp->state().counters;
    return summary;
}

enum class AblationAxis { fitness_shape, mutation_step };

inline AblationAxis ablation_axis_from(const std::string& s) {
    if (s == "fitness-shape") return AblationAxis::fitness_shape;
    if (s == "mutation-step") return AblationAxis::mutation_step;
    throw ConfigError("unknown ablation axis '" + s + "' (expected fitness-shape or mutation-step)");
}

struct AblationRun {
    std::string variant;
    std::uint64_t seed = 0;
    std::vector<EpochMetrics> metrics;
    double final_success() const { return metrics.empty() ? 0.0 : metrics.back().target_success; }
};

struct AblationReport {
    AblationAxis axis = AblationAxis::fitness_shape;
    std::vector<std::string> variants;
    std::vector<AblationRun> runs;

    double mean_final(const std::string& variant) const {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : runs) {
            if (r.variant == variant) {
                sum += r.final_success();
                ++n;
            }
        }
        return n > 0 ? sum / n : 0.0;
    }
};

/// The configs an ablation runs for one seed; they differ only on the chosen axis.
inline std::vector<std::pair<std::string, ExperimentConfig>> ablation_variants(const ExperimentConfig& base,
                                                                               AblationAxis axis) {
    std::vector<std::pair<std::string, ExperimentConfig>> out;
    ExperimentConfig c = base;
    c.mode = RunMode::ccl;
    if (axis == AblationAxis::fitness_shape) {
        c.fitness.mode = FitnessMode::sigmoid;
        out.emplace_back("sigmoid", c);
        c.fitness.mode = FitnessMode::linear;
        out.emplace_back("linear", c);
    } else {
        for (MutationStep m : {MutationStep::adaptive, MutationStep::fixed, MutationStep::none}) {
            c.evolution.mutation_step = m;
            out.emplace_back(std::string(to_string(m)), c);
        }
    }
    return out;
}

/// Report CSV: one row per (run, epoch).
inline constexpr const char* kAblationHeader =
    "variant,seed,epoch,target_success,mean_r,mean_f,cumulative_episodes";

inline AblationReport run_ablation(const ExperimentConfig& base, AblationAxis axis,
                                   const std::vector<std::uint64_t>& seeds,
                                   const std::optional<std::filesystem::path>& report_path = std::nullopt) {
    AblationReport report;
    report.axis = axis;
    for (const auto& [name, _] : ablation_variants(base, axis)) report.variants.push_back(name);
    for (std::uint64_t seed : seeds) {
        ExperimentConfig seeded = base;
        seeded.seed = seed;
        for (auto& [name, cfg] : ablation_variants(seeded, axis)) {
            RunOptions opts;
            opts.write_files = false;
            report.runs.push_back({name, seed, run_experiment(cfg, opts).metrics});
        }
    }
    if (report_path) {
        if (report_path->has_parent_path()) std::filesystem::create_directories(report_path->parent_path());
        std::ofstream out = detail::open_for_write(*report_path);
        out << kAblationHeader << '\n';
        char buf[256];
        for (const auto& run : report.runs) {
            for (const auto& m : run.metrics) {
                std::snprintf(buf, sizeof buf, "%s,%llu,%llu,%.6f,%.6f,%.6f,%llu", run.variant.c_str(),
                              static_cast<unsigned long long>(run.seed), static_cast<unsigned long long>(m.epoch),
                              m.target_success, m.mean_r, m.mean_f,
                              static_cast<unsigned long long>(m.cumulative_episodes));
                out << buf << '\n';
            }
        }
    }
    return report;
}

}  // namespace ccl
