#pragma once

// Sparse-reward cooperative grid "spread": every agent has its own goal cell
// and the team is rewarded only when all agents stand on their goals at once.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ccl/errors.hpp"
#include "ccl/task_model.hpp"

namespace ccl {

enum class Action : std::uint8_t { up = 0, down = 1, left = 2, right = 3, stay = 4 };

inline constexpr std::size_t kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kAllActions = {Action::up, Action::down, Action::left,
                                                               Action::right, Action::stay};

struct EnvConfig {
    int grid_width = 12;
    std::size_t n_agents = 2;
    int horizon = 40;
    bool allow_collisions = true;

    void validate() const {
        if (grid_width < 2) throw ConfigError("grid width must be >= 2");
        if (horizon < 1) throw ConfigError("episode horizon must be >= 1");
        if (n_agents < 1) throw ConfigError("n_agents must be >= 1");
    }
};

struct GridState {
    std::vector<Cell> cells;
    int t = 0;
    friend bool operator==(const GridState&, const GridState&) = default;
};

struct StepResult {
    GridState state;
    double reward = 0.0;
    bool done = false;
};

inline Cell apply_move(Cell c, Action a, int width) {
    switch (a) {
        case Action::up: c.y = std::min(c.y + 1, width - 1); break;
        case Action::down: c.y = std::max(c.y - 1, 0); break;
        case Action::left: c.x = std::max(c.x - 1, 0); break;
        case Action::right: c.x = std::min(c.x + 1, width - 1); break;
        case Action::stay: break;
    }
    return c;
}

/// Per-agent tabular observation: ((x*W + y)*W + gx)*W + gy.
inline std::size_t obs_index(Cell cell, Cell goal, int width) {
    const auto w = static_cast<std::size_t>(width);
    return ((static_cast<std::size_t>(cell.x) * w + static_cast<std::size_t>(cell.y)) * w +
            static_cast<std::size_t>(goal.x)) * w + static_cast<std::size_t>(goal.y);
}

inline std::size_t num_observations(int width) {
    const auto w = static_cast<std::size_t>(width);
    return w * w * w * w;
}

class GridSpread {
public:
    explicit GridSpread(EnvConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    const EnvConfig& config() const { return cfg_; }
    const std::vector<Cell>& goals() const { return goals_; }
    const GridState& state() const { return state_; }
    bool done() const { return done_; }

    GridState reset(const TaskGenome& task) {
        if (task.n_agents() != cfg_.n_agents) {
            throw ContractViolation("task agent count does not match the environment");
        }
        const auto placements = discretize(task, cfg_.grid_width);
        state_.cells.clear();
        goals_.clear();
        for (const auto& p : placements) {
            state_.cells.push_back(p.start);
            goals_.push_back(p.goal);
        }
        state_.t = 0;
        done_ = false;
        return state_;
    }

    /// Places agents and goals directly (used by exhaustive checks).
    GridState reset(std::vector<Cell> cells, std::vector<Cell> goals) {
        if (cells.size() != cfg_.n_agents || goals.size() != cfg_.n_agents) {
            throw ContractViolation("placement size does not match the environment");
        }
        for (const auto& c : cells) check_bounds(c);
        for (const auto& g : goals) check_bounds(g);
        state_ = {std::move(cells), 0};
        goals_ = std::move(goals);
        done_ = false;
        return state_;
    }

    StepResult step(std::span<const Action> joint) {
        if (done_) throw ContractViolation("step called on a finished episode");
        if (joint.size() != cfg_.n_agents) throw ContractViolation("joint action size mismatch");

        if (cfg_.allow_collisions) {
            for (std::size_t i = 0; i < joint.size(); ++i) {
                state_.cells[i] = apply_move(state_.cells[i], joint[i], cfg_.grid_width);
            }
        } else {
            // Agents move in index order; a move into an occupied cell is cancelled.
            for (std::size_t i = 0; i < joint.size(); ++i) {
                const Cell next = apply_move(state_.cells[i], joint[i], cfg_.grid_width);
                bool blocked = false;
                for (std::size_t j = 0; j < joint.size(); ++j) {
                    if (j != i && state_.cells[j] == next) blocked = true;
                }
                if (!blocked) state_.cells[i] = next;
            }
        }
        ++state_.t;

        const bool success = all_on_goals();
        done_ = success || state_.t >= cfg_.horizon;
        return {state_, success ? 1.0 : 0.0, done_};
    }

    bool all_on_goals() const {
        for (std::size_t i = 0; i < goals_.size(); ++i) {
            if (!(state_.cells[i] == goals_[i])) return false;
        }
        return true;
    }

    std::size_t observation(std::size_t agent) const {
        return obs_index(state_.cells.at(agent), goals_.at(agent), cfg_.grid_width);
    }

private:
    void check_bounds(const Cell& c) const {
        if (c.x < 0 || c.y < 0 || c.x >= cfg_.grid_width || c.y >= cfg_.grid_width) {
            throw ContractViolation("cell out of bounds");
        }
    }

    EnvConfig cfg_;
    GridState state_;
    std::vector<Cell> goals_;
    bool done_ = true;
};

}  // namespace ccl
