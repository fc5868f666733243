#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccl/errors.hpp"

namespace ccl {

enum class FitnessMode {
    sigmoid,          ///< 1 / (1 + exp(+gain |r - 0.5|)), peaks at r = 0.5
    linear,           ///< -slope |r - 0.5|
    sigmoid_literal,  ///< 1 / (1 + exp(-gain |r - 0.5|)), minimal at r = 0.5
};

struct FitnessParams {
    double gain = 2.0;
    FitnessMode mode = FitnessMode::sigmoid;
    double linear_slope = 1.0;

    void validate() const {
        if (!(gain > 0.0)) throw ConfigError("fitness gain must be > 0");
        if (!(linear_slope > 0.0)) throw ConfigError("linear fitness slope must be > 0");
    }
};

namespace detail {
inline void check_rate(double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("success rate outside [0,1]: " + std::to_string(r));
}
}  // namespace detail

inline double sigmoid_fitness(double r, const FitnessParams& params = {}) {
    detail::check_rate(r);
    return 1.0 / (1.0 + std::exp(params.gain * std::abs(r - 0.5)));
}

inline double linear_fitness(double r, const FitnessParams& params = {}) {
    detail::check_rate(r);
    return -params.linear_slope * std::abs(r - 0.5);
}

inline double literal_sigmoid_fitness(double r, const FitnessParams& params = {}) {
    detail::check_rate(r);
    return 1.0 / (1.0 + std::exp(-params.gain * std::abs(r - 0.5)));
}

/// Fitness of a measured success rate under the configured mode.
inline double fitness(double r, const FitnessParams& params) {
    switch (params.mode) {
        case FitnessMode::linear: return linear_fitness(r, params);
        case FitnessMode::sigmoid_literal: return literal_sigmoid_fitness(r, params);
        case FitnessMode::sigmoid: break;
    }
    return sigmoid_fitness(r, params);
}

struct Prototype {
    std::vector<double> point;
    double fitness = 0.0;
};

using PrototypeSet = std::vector<Prototype>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractViolation("distance between vectors of different length");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Mean fitness of the k prototypes nearest to `query` (Euclidean).
/// Ties at equal distance go to the lower prototype index.
inline double knn_estimate(std::span<const double> query, const PrototypeSet& prototypes, std::size_t k) {
    if (prototypes.empty()) throw ConfigError("knn estimate over an empty prototype set");
    if (k < 1 || k > prototypes.size()) {
        throw ConfigError("knn neighbour count " + std::to_string(k) + " not in [1, " +
                          std::to_string(prototypes.size()) + "]");
    }
    struct Ranked {
        double dist;
        std::size_t index;
    };
    std::vector<Ranked> ranked(prototypes.size());
    for (std::size_t i = 0; i < prototypes.size(); ++i) {
        ranked[i] = {squared_distance(query, prototypes[i].point), i};
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                      [](const Ranked& a, const Ranked& b) {
                          return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
                      });
    double sum = 0.0;
    double lo = prototypes[ranked[0].index].fitness;
    double hi = lo;
    for (std::size_t i = 0; i < k; ++i) {
        const double f = prototypes[ranked[i].index].fitness;
        sum += f;
        lo = std::min(lo, f);
        hi = std::max(hi, f);
    }
    // Rounding in the sum can push the mean of near-equal values one ulp outside.
    return std::clamp(sum / static_cast<double>(k), lo, hi);
}

}  // namespace ccl
