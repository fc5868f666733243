#pragma once

// Task genomes: per-agent [start_x, start_y, goal_x, goal_y] blocks in the
// normalized unit box, plus the mapping onto grid cells.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccl/errors.hpp"

namespace ccl {

using AgentBlock = std::array<double, 4>;

inline constexpr std::size_t kBlockSize = 4;

/// Side length of the unit square an agent's start and goal live in.
inline const double kUnitSquareDiameter = std::numbers::sqrt2;

class TaskGenome {
public:
    TaskGenome() = default;

    /// Throws ConfigError if there are no blocks or a component leaves [0,1].
    explicit TaskGenome(std::vector<AgentBlock> blocks) : blocks_(std::move(blocks)) {
        if (blocks_.empty()) throw ConfigError("task genome needs at least one agent");
        for (const auto& b : blocks_) {
            for (double c : b) {
                if (!(c >= 0.0 && c <= 1.0)) {
                    throw ConfigError("task genome component outside [0,1]: " + std::to_string(c));
                }
            }
        }
    }

    /// Builds from a flat array of 4n reals. Components are validated.
    static TaskGenome from_flat(std::span<const double> flat) {
        if (flat.empty() || flat.size() % kBlockSize != 0) {
            throw ConfigError("flat genome length must be a positive multiple of 4");
        }
        std::vector<AgentBlock> blocks(flat.size() / kBlockSize);
        for (std::size_t i = 0; i < flat.size(); ++i) blocks[i / kBlockSize][i % kBlockSize] = flat[i];
        return TaskGenome(std::move(blocks));
    }

    std::size_t n_agents() const { return blocks_.size(); }
    const std::vector<AgentBlock>& blocks() const { return blocks_; }
    const AgentBlock& block(std::size_t agent) const { return blocks_.at(agent); }

    std::vector<double> flat() const {
        std::vector<double> out;
        out.reserve(blocks_.size() * kBlockSize);
        for (const auto& b : blocks_) out.insert(out.end(), b.begin(), b.end());
        return out;
    }

    friend bool operator==(const TaskGenome&, const TaskGenome&) = default;

private:
    std::vector<AgentBlock> blocks_;
};

struct TaskDomain {
    std::size_t n_agents = 2;
    int grid_width = 12;
    /// Normalized start-goal distance bound for the initial population.
    double delta = 0.01 * kUnitSquareDiameter;

    void validate() const {
        if (n_agents < 1) throw ConfigError("task domain needs n_agents >= 1");
        if (grid_width < 2) throw ConfigError("grid width must be >= 2");
        if (!(delta > 0.0) || delta > kUnitSquareDiameter) {
            throw ConfigError("delta must lie in (0, sqrt(2)]");
        }
    }
};

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct AgentPlacement {
    Cell start;
    Cell goal;
    friend bool operator==(const AgentPlacement&, const AgentPlacement&) = default;
};

/// Mean over agents of the Euclidean start-goal distance.
inline double start_goal_distance(const TaskGenome& genome) {
    double sum = 0.0;
    for (const auto& b : genome.blocks()) sum += std::hypot(b[2] - b[0], b[3] - b[1]);
    return sum / static_cast<double>(genome.n_agents());
}

inline int to_cell(double coord, int width) {
    const int c = static_cast<int>(std::floor(coord * width));
    return std::clamp(c, 0, width - 1);
}

inline std::vector<AgentPlacement> discretize(const TaskGenome& genome, int width) {
    if (width < 2) throw ConfigError("grid width must be >= 2");
    std::vector<AgentPlacement> out;
    out.reserve(genome.n_agents());
    for (const auto& b : genome.blocks()) {
        out.push_back({{to_cell(b[0], width), to_cell(b[1], width)},
                       {to_cell(b[2], width), to_cell(b[3], width)}});
    }
    return out;
}

inline std::vector<AgentPlacement> discretize(const TaskGenome& genome, const TaskDomain& domain) {
    return discretize(genome, domain.grid_width);
}

/// Clamps raw blocks (possibly out of the box, possibly NaN-free sums) into a genome.
inline TaskGenome clip_to_domain(std::vector<AgentBlock> blocks) {
    for (auto& b : blocks) {
        for (double& c : b) c = std::clamp(c, 0.0, 1.0);
    }
    return TaskGenome(std::move(blocks));
}

inline TaskGenome clip_to_domain(const TaskGenome& genome) { return clip_to_domain(genome.blocks()); }

}  // namespace ccl
