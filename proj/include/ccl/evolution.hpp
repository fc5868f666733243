#pragma once

// Curriculum population lifecycle: initialization near zero start-goal
// distance, random pairing, per-agent gated crossover and mutation,
// removal of solved/hopeless tasks, prototype KNN fitness and soft selection
// of the next training batch.

#include <algorithm>
#include <array>
#include <numbers>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ccl/errors.hpp"
#include "ccl/fitness.hpp"
#include "ccl/rng.hpp"
#include "ccl/task_model.hpp"

namespace ccl {

enum class Origin { init, cross, mutate };

inline std::string_view to_string(Origin o) {
    switch (o) {
        case Origin::cross: return "cross";
        case Origin::mutate: return "mutate";
        case Origin::init: break;
    }
    return "init";
}

inline Origin origin_from_string(std::string_view s) {
    if (s == "init") return Origin::init;
    if (s == "cross") return Origin::cross;
    if (s == "mutate") return Origin::mutate;
    throw ConfigError("unknown task origin: " + std::string(s));
}

struct TaskRecord {
    std::uint64_t id = 0;
    TaskGenome genome;
    std::optional<double> r;  ///< success rate measured in the current epoch
    double f = 0.0;
    std::uint64_t epoch_born = 0;
    Origin origin = Origin::init;

    friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

struct Population {
    std::vector<TaskRecord> active;
    /// One entry per finished generation, C_0 .. C_{epoch-1}.
    std::vector<std::vector<TaskRecord>> archive;
    /// Records of the current generation taken out of `active` by the band rule.
    std::vector<TaskRecord> removed;
    std::uint64_t epoch = 0;
    std::uint64_t next_id = 0;

    std::size_t archived_records() const {
        std::size_t n = 0;
        for (const auto& g : archive) n += g.size();
        return n;
    }
};

enum class MutationStep { adaptive, fixed, none };

inline std::string_view to_string(MutationStep m) {
    switch (m) {
        case MutationStep::fixed: return "fixed";
        case MutationStep::none: return "none";
        case MutationStep::adaptive: break;
    }
    return "adaptive";
}

struct EvolutionParams {
    std::size_t population_size = 64;
    std::size_t sample_size = 16;
    double alpha_new = 0.7;  ///< share of each training batch drawn from the newest generation
    std::size_t neighbours = 4;
    double sigma_max = 0.15;
    double band_low = 0.02;
    double band_high = 0.98;
    MutationStep mutation_step = MutationStep::adaptive;

    void validate() const {
        if (population_size < 2 || population_size % 2 != 0) {
            throw ConfigError("population size must be even and >= 2");
        }
        if (sample_size < 1 || sample_size > population_size) {
            throw ConfigError("sample size must lie in [1, population size]");
        }
        if (!(alpha_new >= 0.0 && alpha_new <= 1.0)) throw ConfigError("alpha_new must lie in [0,1]");
        if (neighbours < 1 || neighbours > sample_size) throw ConfigError("neighbours must lie in [1, sample size]");
        if (!(sigma_max >= 0.0)) throw ConfigError("sigma_max must be >= 0");
        if (!(band_low >= 0.0 && band_low < band_high && band_high <= 1.0)) {
            throw ConfigError("deletion band must satisfy 0 <= low < high <= 1");
        }
    }
};

namespace detail {
/// Uniform point of the delta-disk around `centre` that lies inside the unit square.
inline std::array<double, 2> near_point(double cx, double cy, double delta, Rng& rng) {
    for (;;) {
        const double radius = delta * std::sqrt(rng.uniform());
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        const double x = cx + radius * std::cos(angle);
        const double y = cy + radius * std::sin(angle);
        if (x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0) return {x, y};
    }
}
}  // namespace detail

/// Tasks whose agents each start within `domain.delta` of their goal.
///
/// Without an anchor, starts are uniform over the unit square and goals are
/// uniform over the part of the delta-disk around the start that lies in the
/// square. With an anchor, every agent's goal is the anchor's goal and the
/// start is drawn the same way around it.
inline Population init_population(const TaskDomain& domain, std::size_t population_size, Rng& rng,
                                  const std::optional<TaskGenome>& anchor = std::nullopt) {
    domain.validate();
    if (population_size < 2 || population_size % 2 != 0) {
        throw ConfigError("population size must be even and >= 2");
    }
    if (anchor && anchor->n_agents() != domain.n_agents) {
        throw ConfigError("initial-region anchor does not match the agent count");
    }
    Population pop;
    pop.active.reserve(population_size);
    for (std::size_t t = 0; t < population_size; ++t) {
        std::vector<AgentBlock> blocks(domain.n_agents);
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            auto& b = blocks[j];
            if (anchor) {
                b[2] = anchor->block(j)[2];
                b[3] = anchor->block(j)[3];
                const auto s = detail::near_point(b[2], b[3], domain.delta, rng);
                b[0] = s[0];
                b[1] = s[1];
            } else {
                b[0] = rng.uniform();
                b[1] = rng.uniform();
                const auto g = detail::near_point(b[0], b[1], domain.delta, rng);
                b[2] = g[0];
                b[3] = g[1];
            }
        }
        pop.active.push_back({pop.next_id++, TaskGenome(std::move(blocks)), std::nullopt, 0.0, 0, Origin::init});
    }
    return pop;
}

/// Shuffles indices 0..n-1 and pairs the first half with the second half.
inline std::vector<std::pair<std::size_t, std::size_t>> pair_generation(std::size_t n, Rng& rng) {
    if (n % 2 != 0) throw ConfigError("cannot pair an odd number of tasks");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t half = n / 2;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(half);
    for (std::size_t i = 0; i < half; ++i) pairs.emplace_back(order[i], order[i + half]);
    return pairs;
}

inline std::vector<std::pair<std::size_t, std::size_t>> pair_generation(std::span<const TaskRecord> active,
                                                                        Rng& rng) {
    return pair_generation(active.size(), rng);
}

/// |fA - fB| normalized by the population's fitness range; 0 for a flat population.
inline double crossover_step(double fa, double fb, double f_min, double f_max) {
    const double range = f_max - f_min;
    if (!(range > 0.0)) return 0.0;
    return std::clamp(std::abs(fa - fb) / range, 0.0, 1.0);
}

struct Direction {
    std::vector<AgentBlock> blocks;  ///< zero for agents whose gate is off
    std::vector<bool> gated;
};

/// Each agent independently: u < 0.5 gives a zero block, otherwise the
/// blockwise difference of the two parents.
inline Direction sample_direction(const TaskGenome& a, const TaskGenome& b, Rng& rng) {
    if (a.n_agents() != b.n_agents()) throw ContractViolation("crossover parents differ in agent count");
    Direction d;
    d.blocks.assign(a.n_agents(), AgentBlock{});
    d.gated.assign(a.n_agents(), false);
    for (std::size_t j = 0; j < a.n_agents(); ++j) {
        if (rng.uniform() < 0.5) continue;
        d.gated[j] = true;
        for (std::size_t c = 0; c < kBlockSize; ++c) d.blocks[j][c] = a.block(j)[c] - b.block(j)[c];
    }
    return d;
}

/// Shifts a genome by step * direction on the gated agents only, then clips.
inline TaskGenome shift(const TaskGenome& parent, double step, const Direction& d) {
    std::vector<AgentBlock> blocks = parent.blocks();
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        if (!d.gated[j]) continue;
        for (std::size_t c = 0; c < kBlockSize; ++c) blocks[j][c] += step * d.blocks[j][c];
    }
    return clip_to_domain(std::move(blocks));
}

/// Both children move by the same step * direction.
inline std::pair<TaskGenome, TaskGenome> crossover(const TaskRecord& a, const TaskRecord& b, double f_min,
                                                   double f_max, Rng& rng) {
    const double step = crossover_step(a.f, b.f, f_min, f_max);
    const Direction d = sample_direction(a.genome, b.genome, rng);
    return {shift(a.genome, step, d), shift(b.genome, step, d)};
}

inline double mutation_sigma(const TaskRecord& a, const TaskRecord& b, double f_min, double f_max,
                             const EvolutionParams& params) {
    switch (params.mutation_step) {
        case MutationStep::none: return 0.0;
        case MutationStep::fixed: return params.sigma_max;
        case MutationStep::adaptive: break;
    }
    return params.sigma_max * crossover_step(a.f, b.f, f_min, f_max);
}

/// Perturbs the first parent: each agent block, with probability 0.5,
/// receives uniform noise in [-sigma, sigma]^4.
inline TaskGenome mutate(const TaskRecord& a, const TaskRecord& b, double f_min, double f_max,
                         const EvolutionParams& params, Rng& rng) {
    if (a.genome.n_agents() != b.genome.n_agents()) {
        throw ContractViolation("mutation parents differ in agent count");
    }
    const double sigma = mutation_sigma(a, b, f_min, f_max, params);
    std::vector<AgentBlock> blocks = a.genome.blocks();
    bool touched = false;
    for (auto& block : blocks) {
        if (rng.uniform() < 0.5) continue;
        for (double& c : block) {
            const double noise = rng.uniform(-sigma, sigma);
            if (sigma > 0.0) {
                c += noise;
                touched = true;
            }
        }
    }
    return touched ? clip_to_domain(std::move(blocks)) : a.genome;
}

/// Splits records by the success band; unmeasured records are always kept.
inline std::pair<std::vector<TaskRecord>, std::vector<TaskRecord>> delete_bad_tasks(
    std::vector<TaskRecord> active, double band_low, double band_high) {
    std::vector<TaskRecord> kept;
    std::vector<TaskRecord> removed;
    for (auto& rec : active) {
        const bool bad = rec.r && (*rec.r < band_low || *rec.r > band_high);
        (bad ? removed : kept).push_back(std::move(rec));
    }
    return {std::move(kept), std::move(removed)};
}

inline PrototypeSet make_prototypes(std::span<const TaskRecord> trained) {
    PrototypeSet set;
    set.reserve(trained.size());
    for (const auto& rec : trained) set.push_back({rec.genome.flat(), rec.f});
    return set;
}

/// Records trained this epoch keep their measured fitness; the rest get the
/// KNN estimate against the trained prototypes and lose any stale rate.
/// Returns the number of estimated records.
inline std::size_t assign_population_fitness(std::vector<TaskRecord>& active, std::span<const TaskRecord> trained,
                                             std::size_t k) {
    if (trained.size() < k || k < 1) {
        throw ConfigError("need at least k = " + std::to_string(k) + " trained prototypes, have " +
                          std::to_string(trained.size()));
    }
    std::unordered_set<std::uint64_t> trained_ids;
    for (const auto& t : trained) trained_ids.insert(t.id);
    const PrototypeSet prototypes = make_prototypes(trained);
    std::size_t estimated = 0;
    for (auto& rec : active) {
        if (trained_ids.contains(rec.id)) continue;
        rec.f = knn_estimate(rec.genome.flat(), prototypes, k);
        rec.r.reset();
        ++estimated;
    }
    return estimated;
}

struct GenerationReport {
    std::size_t crossovers = 0;
    std::size_t mutations = 0;
    std::size_t children = 0;
};

/// Produces C_{i+1} from the active generation and archives C_i.
///
/// Each pair yields two crossover children (coin > 0.5) or one mutant. The
/// next generation is the children followed by the fittest parents, sized to
/// exactly `population_size`.
inline GenerationReport evolve_generation(Population& pop, const EvolutionParams& params, Rng& rng) {
    std::vector<TaskRecord> parents = pop.active;
    if (parents.empty()) parents = pop.removed;
    if (parents.empty()) throw ContractViolation("cannot evolve an empty population");

    auto fitter = [](const TaskRecord& x, const TaskRecord& y) {
        return x.f > y.f || (x.f == y.f && x.id < y.id);
    };

    // An odd leftover (after band removal) sits out of pairing but can still be refilled.
    std::vector<TaskRecord> breeders = parents;
    if (breeders.size() % 2 != 0) {
        auto worst = std::min_element(breeders.begin(), breeders.end(),
                                      [&](const TaskRecord& x, const TaskRecord& y) { return fitter(y, x); });
        breeders.erase(worst);
    }

    double f_min = 0.0;
    double f_max = 0.0;
    if (!breeders.empty()) {
        const auto [lo, hi] = std::minmax_element(breeders.begin(), breeders.end(),
                                                  [](const TaskRecord& x, const TaskRecord& y) { return x.f < y.f; });
        f_min = lo->f;
        f_max = hi->f;
    }

    GenerationReport report;
    const std::uint64_t born = pop.epoch + 1;
    std::vector<TaskRecord> next;
    next.reserve(params.population_size);
    auto add_child = [&](TaskGenome g, Origin origin) {
        if (next.size() < params.population_size) {
            next.push_back({pop.next_id++, std::move(g), std::nullopt, 0.0, born, origin});
            ++report.children;
        }
    };

    for (const auto& [ia, ib] : pair_generation(breeders.size(), rng)) {
        const TaskRecord& a = breeders[ia];
        const TaskRecord& b = breeders[ib];
        if (rng.uniform() > 0.5) {
            auto [ca, cb] = crossover(a, b, f_min, f_max, rng);
            add_child(std::move(ca), Origin::cross);
            add_child(std::move(cb), Origin::cross);
            ++report.crossovers;
        } else {
            add_child(mutate(a, b, f_min, f_max, params, rng), Origin::mutate);
            ++report.mutations;
        }
    }

    std::stable_sort(parents.begin(), parents.end(), fitter);
    for (std::size_t i = 0; next.size() < params.population_size; i = (i + 1) % parents.size()) {
        next.push_back(parents[i]);
    }

    std::vector<TaskRecord> finished = std::move(pop.active);
    finished.insert(finished.end(), std::make_move_iterator(pop.removed.begin()),
                    std::make_move_iterator(pop.removed.end()));
    pop.removed.clear();
    pop.archive.push_back(std::move(finished));
    pop.active = std::move(next);
    pop.epoch = born;
    return report;
}

struct Batch {
    std::vector<TaskRecord> tasks;
    std::size_t from_new = 0;
    std::size_t from_archive = 0;
};

namespace detail {
/// `count` picks from [0, n): without replacement when possible.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
    std::vector<std::size_t> out;
    if (n == 0 || count == 0) return out;
    if (count > n) {
        for (std::size_t i = 0; i < count; ++i) out.push_back(rng.index(n));
        return out;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        std::swap(order[i], order[i + rng.index(n - i)]);
        out.push_back(order[i]);
    }
    return out;
}
}  // namespace detail

/// round(n_t * alpha_new) tasks from the newest generation, the rest from the
/// pooled archive; an empty archive is made up from the newest generation.
inline Batch soft_select(const Population& pop, const EvolutionParams& params, Rng& rng) {
    if (pop.active.empty()) throw ContractViolation("soft selection from an empty generation");
    const std::size_t n_t = params.sample_size;
    std::size_t n_new = static_cast<std::size_t>(std::llround(static_cast<double>(n_t) * params.alpha_new));
    n_new = std::min(n_new, n_t);

    std::vector<const TaskRecord*> pool;
    for (const auto& g : pop.archive) {
        for (const auto& rec : g) pool.push_back(&rec);
    }
    if (pool.empty()) n_new = n_t;

    Batch batch;
    for (std::size_t i : detail::sample_indices(pop.active.size(), n_new, rng)) {
        batch.tasks.push_back(pop.active[i]);
    }
    for (std::size_t i : detail::sample_indices(pool.size(), n_t - n_new, rng)) {
        batch.tasks.push_back(*pool[i]);
    }
    batch.from_new = n_new;
    batch.from_archive = n_t - n_new;
    return batch;
}

}  // namespace ccl
