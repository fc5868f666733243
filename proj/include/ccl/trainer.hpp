#pragma once

// Independent tabular Q-learners trained on the shared team reward.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "ccl/envs.hpp"
#include "ccl/errors.hpp"
#include "ccl/rng.hpp"
#include "ccl/task_model.hpp"

namespace ccl {

struct LearnerParams {
    double learning_rate = 0.1;
    double discount = 0.95;
    double epsilon_start = 0.2;
    double epsilon_decay = 0.995;  ///< multiplicative, per epoch
    double epsilon_floor = 0.02;
    std::size_t workers = 1;

    void validate() const {
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning rate must be in (0,1]");
        if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must be in (0,1]");
        if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw ConfigError("epsilon must be in [0,1]");
        if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0)) throw ConfigError("epsilon floor must be in [0,1]");
        if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("epsilon decay must be in (0,1]");
        if (workers < 1) throw ConfigError("need at least one worker");
    }

    double epsilon_at(std::uint64_t epoch) const {
        const double e = epsilon_start * std::pow(epsilon_decay, static_cast<double>(epoch));
        return std::max(epsilon_floor, std::min(e, epsilon_start));
    }
};

/// One action-value table per agent over (cell, goal) observations.
class PolicyTable {
public:
    PolicyTable() = default;
    PolicyTable(std::size_t n_agents, int width)
        : n_agents_(n_agents), width_(width), per_agent_(num_observations(width) * kNumActions),
          q_(n_agents * per_agent_, 0.0) {}

    std::size_t n_agents() const { return n_agents_; }
    int width() const { return width_; }

    std::span<double, kNumActions> values(std::size_t agent, std::size_t obs) {
        return std::span<double, kNumActions>(q_.data() + offset(agent, obs), kNumActions);
    }
    std::span<const double, kNumActions> values(std::size_t agent, std::size_t obs) const {
        return std::span<const double, kNumActions>(q_.data() + offset(agent, obs), kNumActions);
    }

    double max_value(std::size_t agent, std::size_t obs) const {
        const auto v = values(agent, obs);
        return *std::max_element(v.begin(), v.end());
    }

    /// Arg-max with uniformly random tie breaking.
    Action greedy(std::size_t agent, std::size_t obs, Rng& rng) const {
        const auto v = values(agent, obs);
        const double best = *std::max_element(v.begin(), v.end());
        std::array<std::size_t, kNumActions> ties{};
        std::size_t n = 0;
        for (std::size_t a = 0; a < kNumActions; ++a) {
            if (v[a] == best) ties[n++] = a;
        }
        return static_cast<Action>(n == 1 ? ties[0] : ties[rng.index(n)]);
    }

    /// Arg-max preferring `stay`, then the lowest action index, on ties.
    Action greedy(std::size_t agent, std::size_t obs) const {
        const auto v = values(agent, obs);
        const auto stay = static_cast<std::size_t>(Action::stay);
        std::size_t best = stay;
        for (std::size_t a = 0; a < kNumActions; ++a) {
            if (v[a] > v[best]) best = a;
        }
        return static_cast<Action>(best);
    }

    std::span<const double> raw() const { return q_; }
    std::span<double> raw() { return q_; }

    friend bool operator==(const PolicyTable&, const PolicyTable&) = default;

private:
    std::size_t offset(std::size_t agent, std::size_t obs) const { return agent * per_agent_ + obs * kNumActions; }

    std::size_t n_agents_ = 0;
    int width_ = 0;
    std::size_t per_agent_ = 0;
    std::vector<double> q_;
};

struct Transition {
    std::vector<std::size_t> obs;
    std::vector<Action> actions;
    std::vector<std::size_t> next_obs;
    double reward = 0.0;
    bool terminal = false;  ///< goal configuration reached; no bootstrap
};

struct RolloutResult {
    bool success = false;
    int steps = 0;
    std::vector<Transition> trajectory;
};

/// Q_i(s,a) += lr * (r + gamma * max Q_i(s',.) - Q_i(s,a)) for every agent,
/// all driven by the one shared reward.
inline void td_update(PolicyTable& policy, const Transition& tr, const LearnerParams& params) {
    for (std::size_t i = 0; i < tr.obs.size(); ++i) {
        const double bootstrap = tr.terminal ? 0.0 : params.discount * policy.max_value(i, tr.next_obs[i]);
        double& q = policy.values(i, tr.obs[i])[static_cast<std::size_t>(tr.actions[i])];
        q += params.learning_rate * (tr.reward + bootstrap - q);
    }
}

namespace detail {
/// Episode driver; `learner` (when non-null) receives online TD updates and
/// must be the same table as `policy`.
inline RolloutResult run_episode(const TaskGenome& task, const PolicyTable& policy, PolicyTable* learner,
                                 const EnvConfig& env_cfg, const LearnerParams& params, double epsilon,
                                 Rng& rng, bool record) {
    GridSpread env(env_cfg);
    env.reset(task);
    const std::size_t n = env_cfg.n_agents;
    if (policy.n_agents() != n || policy.width() != env_cfg.grid_width) {
        throw ContractViolation("policy table does not match the environment");
    }

    RolloutResult result;
    std::vector<Action> joint(n);
    Transition tr;
    tr.obs.resize(n);
    tr.next_obs.resize(n);
    while (!env.done()) {
        for (std::size_t i = 0; i < n; ++i) {
            tr.obs[i] = env.observation(i);
            if (epsilon <= 0.0) {
                joint[i] = policy.greedy(i, tr.obs[i]);
            } else if (rng.uniform() < epsilon) {
                joint[i] = kAllActions[rng.index(kNumActions)];
            } else {
                joint[i] = policy.greedy(i, tr.obs[i], rng);
            }
        }
        const StepResult s = env.step(joint);
        for (std::size_t i = 0; i < n; ++i) tr.next_obs[i] = env.observation(i);
        tr.actions = joint;
        tr.reward = s.reward;
        tr.terminal = s.reward > 0.0;
        if (learner != nullptr) td_update(*learner, tr, params);
        if (record) result.trajectory.push_back(tr);
        ++result.steps;
        if (tr.terminal) result.success = true;
    }
    return result;
}
}  // namespace detail

/// Runs one epsilon-greedy episode; with `learn` set, applies TD updates online.
/// Exploring episodes break greedy ties at random; epsilon = 0 is fully
/// deterministic and resolves ties towards `stay`.
inline RolloutResult rollout(const TaskGenome& task, PolicyTable& policy, const EnvConfig& env_cfg,
                             const LearnerParams& params, double epsilon, bool learn, Rng& rng,
                             bool record = true) {
    return detail::run_episode(task, policy, learn ? &policy : nullptr, env_cfg, params, epsilon, rng, record);
}

struct TaskOutcome {
    std::size_t task_index = 0;
    int episodes = 0;
    int successes = 0;
    long steps = 0;
    double rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
};

/// Greedy evaluation without learning; returns the fraction of successful episodes.
inline double evaluate_target(const PolicyTable& policy, const TaskGenome& target, const EnvConfig& env_cfg,
                              int episodes, Rng& rng) {
    if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
    const LearnerParams unused;
    int wins = 0;
    for (int e = 0; e < episodes; ++e) {
        if (detail::run_episode(target, policy, nullptr, env_cfg, unused, 0.0, rng, false).success) ++wins;
    }
    return static_cast<double>(wins) / episodes;
}

namespace detail {
inline constexpr std::uint64_t kTrainStream = 0x7452;
inline constexpr std::uint64_t kEvalStream = 0x6576;

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}
}  // namespace detail

/// Runs `episodes_per_task` learning episodes on each task of the batch.
///
/// Every task learns online against its own copy of the epoch-start policy,
/// so tasks can run on separate workers; the recorded experience is then
/// replayed onto `policy` in task-index order. The result does not depend on
/// the worker count. Each (epoch, task, episode) has its own random stream.
inline std::vector<TaskOutcome> train_on_tasks(std::span<const TaskGenome> batch, PolicyTable& policy,
                                               const EnvConfig& env_cfg, const LearnerParams& params,
                                               int episodes_per_task, std::uint64_t seed, std::uint64_t epoch) {
    if (episodes_per_task < 1) throw ConfigError("episodes per task must be >= 1");
    const double epsilon = params.epsilon_at(epoch);
    std::vector<TaskOutcome> outcomes(batch.size());
    std::vector<std::vector<Transition>> experience(batch.size());

    detail::parallel_for(batch.size(), params.workers, [&](std::size_t j) {
        PolicyTable local = policy;
        TaskOutcome& out = outcomes[j];
        out.task_index = j;
        for (int e = 0; e < episodes_per_task; ++e) {
            Rng rng = Rng::derive(seed, {detail::kTrainStream, epoch, j, static_cast<std::uint64_t>(e)});
            RolloutResult r = rollout(batch[j], local, env_cfg, params, epsilon, true, rng);
            ++out.episodes;
            out.successes += r.success ? 1 : 0;
            out.steps += r.steps;
            auto& buf = experience[j];
            buf.insert(buf.end(), std::make_move_iterator(r.trajectory.begin()),
                       std::make_move_iterator(r.trajectory.end()));
        }
    });

    for (const auto& buf : experience) {
        for (const auto& tr : buf) td_update(policy, tr, params);
    }
    return outcomes;
}

/// Learner seam used by the experiment loop; a policy-gradient learner could
/// implement the same three calls.
class CooperativeLearner {
public:
    virtual ~CooperativeLearner() = default;
    virtual std::vector<TaskOutcome> train(std::span<const TaskGenome> batch, int episodes_per_task,
                                           std::uint64_t epoch) = 0;
    virtual double evaluate(const TaskGenome& target, int episodes, std::uint64_t epoch) const = 0;
};

class TabularQLearner final : public CooperativeLearner {
public:
    TabularQLearner(EnvConfig env_cfg, LearnerParams params, std::uint64_t seed)
        : env_cfg_(env_cfg), params_(params), seed_(seed), policy_(env_cfg.n_agents, env_cfg.grid_width) {
        env_cfg_.validate();
        params_.validate();
    }

    std::vector<TaskOutcome> train(std::span<const TaskGenome> batch, int episodes_per_task,
                                   std::uint64_t epoch) override {
        return train_on_tasks(batch, policy_, env_cfg_, params_, episodes_per_task, seed_, epoch);
    }

    double evaluate(const TaskGenome& target, int episodes, std::uint64_t epoch) const override {
        Rng rng = Rng::derive(seed_, {detail::kEvalStream, epoch});
        return evaluate_target(policy_, target, env_cfg_, episodes, rng);
    }

    const PolicyTable& policy() const { return policy_; }
    PolicyTable& policy() { return policy_; }
    const EnvConfig& env_config() const { return env_cfg_; }

private:
    EnvConfig env_cfg_;
    LearnerParams params_;
    std::uint64_t seed_;
    PolicyTable policy_;
};

}  // namespace ccl
