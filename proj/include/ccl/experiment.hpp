#pragma once

// The co-evolution loop: train on the current batch, score and prune tasks,
// estimate fitness for the rest of the population, breed the next
// generation, soft-select the next batch, evaluate the target.

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccl/envs.hpp"
#include "ccl/errors.hpp"
#include "ccl/evolution.hpp"
#include "ccl/fitness.hpp"
#include "ccl/rng.hpp"
#include "ccl/task_model.hpp"
#include "ccl/trainer.hpp"

namespace ccl {

enum class RunMode { ccl, vanilla };

/// Where the initial population lives: anywhere in the square, or around the target's goals.
enum class InitRegion { uniform, target_goals };

inline std::string_view to_string(InitRegion r) { return r == InitRegion::target_goals ? "target_goals" : "uniform"; }

inline std::string_view to_string(RunMode m) { return m == RunMode::vanilla ? "vanilla" : "ccl"; }

/// Agent i starts at corner i of (0,0),(1,0),(1,1),(0,1) and heads for the opposite corner.
inline TaskGenome corner_target(std::size_t n_agents) {
    static constexpr std::array<std::array<double, 2>, 4> corners = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    std::vector<AgentBlock> blocks;
    for (std::size_t i = 0; i < n_agents; ++i) {
        const auto& s = corners[i % 4];
        const auto& g = corners[(i + 2) % 4];
        blocks.push_back({s[0], s[1], g[0], g[1]});
    }
    return TaskGenome(std::move(blocks));
}

struct ExperimentConfig {
    RunMode mode = RunMode::ccl;
    std::uint64_t seed = 1;
    std::uint64_t epochs = 100;
    int episodes_per_task = 10;
    int eval_episodes = 10;
    double init_delta = 0.01 * kUnitSquareDiameter;
    InitRegion init_region = InitRegion::uniform;
    EnvConfig env;
    EvolutionParams evolution;
    FitnessParams fitness;
    LearnerParams learner;
    std::optional<TaskGenome> target;  ///< defaults to corner_target
    std::string output_dir;            ///< empty: no files written
    std::uint64_t snapshot_interval = 0;  ///< 0: initial and final snapshots only

    TaskGenome target_task() const { return target ? *target : corner_target(env.n_agents); }

    TaskDomain domain() const { return {env.n_agents, env.grid_width, init_delta}; }

    void validate() const {
        env.validate();
        evolution.validate();
        fitness.validate();
        learner.validate();
        domain().validate();
        if (episodes_per_task < 1) throw ConfigError("episodes_per_task must be >= 1");
        if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
        if (target && target->n_agents() != env.n_agents) {
            throw ConfigError("target task agent count does not match env.n_agents");
        }
    }

    /// Training episodes consumed per epoch.
    std::uint64_t episodes_per_epoch() const {
        return static_cast<std::uint64_t>(evolution.sample_size) * static_cast<std::uint64_t>(episodes_per_task);
    }
};

struct EpochMetrics {
    std::uint64_t epoch = 0;
    double target_success = 0.0;
    double mean_r = 0.0;
    double mean_f = 0.0;
    std::size_t batch_new = 0;
    std::size_t batch_old = 0;
    std::uint64_t cumulative_episodes = 0;
    std::uint64_t cumulative_steps = 0;
    double wall_seconds = 0.0;
};

/// Counts of curriculum operations performed; all stay zero in vanilla mode.
struct EvolutionCounters {
    std::uint64_t initializations = 0;
    std::uint64_t pairings = 0;
    std::uint64_t crossovers = 0;
    std::uint64_t mutations = 0;
    std::uint64_t deletions = 0;
    std::uint64_t estimates = 0;
    std::uint64_t selections = 0;

    std::uint64_t total() const {
        return initializations + pairings + crossovers + mutations + deletions + estimates + selections;
    }
    friend bool operator==(const EvolutionCounters&, const EvolutionCounters&) = default;
};

namespace stream {
inline constexpr std::uint64_t init = 0x696e6974;
inline constexpr std::uint64_t evolve = 0x65766f6c;
inline constexpr std::uint64_t select = 0x73656c63;
}  // namespace stream

/// Complete resumable state of one run.
struct RunState {
    std::uint64_t epoch = 0;  ///< epochs completed
    std::uint64_t cumulative_episodes = 0;
    std::uint64_t cumulative_steps = 0;
    std::optional<Population> population;
    std::vector<TaskRecord> batch;
    std::size_t batch_new = 0;
    std::size_t batch_old = 0;
    EvolutionCounters counters;
};

class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg)
        : cfg_(std::move(cfg)), target_((cfg_.validate(), cfg_.target_task())),
          learner_(cfg_.env, cfg_.learner, cfg_.seed) {
        if (cfg_.mode == RunMode::ccl) {
            Rng init_rng = Rng::derive(cfg_.seed, {stream::init});
            state_.population = init_population(
                cfg_.domain(), cfg_.evolution.population_size, init_rng,
                cfg_.init_region == InitRegion::target_goals ? std::optional<TaskGenome>(target_) : std::nullopt);
            ++state_.counters.initializations;
            select_batch(0);
        }
    }

    /// Restores a run from saved state.
    Experiment(ExperimentConfig cfg, RunState state, PolicyTable policy)
        : cfg_(std::move(cfg)), target_((cfg_.validate(), cfg_.target_task())),
          learner_(cfg_.env, cfg_.learner, cfg_.seed), state_(std::move(state)) {
        if ((cfg_.mode == RunMode::ccl) != state_.population.has_value()) {
            throw ConfigError("saved state does not match the configured mode");
        }
        if (policy.n_agents() != cfg_.env.n_agents || policy.width() != cfg_.env.grid_width) {
            throw ConfigError("saved policy does not match the environment configuration");
        }
        learner_.policy() = std::move(policy);
    }

    const ExperimentConfig& config() const { return cfg_; }
    const RunState& state() const { return state_; }
    const TabularQLearner& learner() const { return learner_; }
    const TaskGenome& target() const { return target_; }

    EpochMetrics run_epoch() {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t epoch = state_.epoch + 1;
        EpochMetrics m;
        m.epoch = epoch;

        std::vector<TaskGenome> genomes;
        if (cfg_.mode == RunMode::ccl) {
            for (const auto& rec : state_.batch) genomes.push_back(rec.genome);
        } else {
            genomes.assign(cfg_.evolution.sample_size, target_);
        }

        const auto outcomes = learner_.train(genomes, cfg_.episodes_per_task, epoch);
        double sum_r = 0.0;
        for (const auto& o : outcomes) {
            state_.cumulative_episodes += static_cast<std::uint64_t>(o.episodes);
            state_.cumulative_steps += static_cast<std::uint64_t>(o.steps);
            sum_r += o.rate();
        }
        m.mean_r = outcomes.empty() ? 0.0 : sum_r / static_cast<double>(outcomes.size());

        if (cfg_.mode == RunMode::ccl) {
            m.batch_new = state_.batch_new;
            m.batch_old = state_.batch_old;
            m.mean_f = evolve(outcomes, epoch);
        }

        m.target_success = learner_.evaluate(target_, cfg_.eval_episodes, epoch);
        m.cumulative_episodes = state_.cumulative_episodes;
        m.cumulative_steps = state_.cumulative_steps;
        state_.epoch = epoch;
        m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return m;
    }

private:
    /// Scores the trained batch and advances the population; returns the mean
    /// fitness of the generation that was bred from.
    double evolve(const std::vector<TaskOutcome>& outcomes, std::uint64_t epoch) {
        Population& pop = *state_.population;
        const EvolutionParams& ep = cfg_.evolution;

        for (std::size_t j = 0; j < outcomes.size(); ++j) {
            TaskRecord& rec = state_.batch[j];
            rec.r = outcomes[j].rate();
            rec.f = fitness(*rec.r, cfg_.fitness);
        }
        // Active tasks take the measurement of their first appearance in the batch.
        for (auto& rec : pop.active) {
            for (const auto& b : state_.batch) {
                if (b.id == rec.id) {
                    rec.r = b.r;
                    rec.f = b.f;
                    break;
                }
            }
        }

        auto [kept, removed] = delete_bad_tasks(std::move(pop.active), ep.band_low, ep.band_high);
        state_.counters.deletions += removed.size();
        pop.active = std::move(kept);
        pop.removed.insert(pop.removed.end(), removed.begin(), removed.end());

        state_.counters.estimates += assign_population_fitness(pop.active, state_.batch, ep.neighbours);

        double sum_f = 0.0;
        for (const auto& rec : pop.active) sum_f += rec.f;
        const double mean_f = pop.active.empty() ? 0.0 : sum_f / static_cast<double>(pop.active.size());

        Rng evolve_rng = Rng::derive(cfg_.seed, {stream::evolve, epoch});
        const GenerationReport report = evolve_generation(pop, ep, evolve_rng);
        ++state_.counters.pairings;
        state_.counters.crossovers += report.crossovers;
        state_.counters.mutations += report.mutations;

        select_batch(epoch);
        return mean_f;
    }

    void select_batch(std::uint64_t epoch) {
        Rng rng = Rng::derive(cfg_.seed, {stream::select, epoch});
        Batch b = soft_select(*state_.population, cfg_.evolution, rng);
        ++state_.counters.selections;
        state_.batch = std::move(b.tasks);
        state_.batch_new = b.from_new;
        state_.batch_old = b.from_archive;
    }

    ExperimentConfig cfg_;
    TaskGenome target_;
    TabularQLearner learner_;
    RunState state_;
};

}  // namespace ccl
