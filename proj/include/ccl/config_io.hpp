#pragma once

// JSON form of ExperimentConfig. Every key is optional (defaults apply);
// unknown keys and wrongly typed values are rejected.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include "json.hpp"

#include "ccl/errors.hpp"
#include "ccl/experiment.hpp"

namespace ccl {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, std::string_view where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + "." + key + ": " + e.what());
    }
}

inline void read_count(const json& obj, const char* key, std::size_t& out, std::string_view where) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(std::string(where) + "." + key + " must be a non-negative integer");
    }
    out = v.get<std::size_t>();
}

inline FitnessMode fitness_mode_from(const std::string& s) {
    if (s == "sigmoid") return FitnessMode::sigmoid;
    if (s == "linear") return FitnessMode::linear;
    if (s == "sigmoid_literal") return FitnessMode::sigmoid_literal;
    throw ConfigError("unknown fitness mode '" + s + "'");
}

inline std::string_view to_string(FitnessMode m) {
    switch (m) {
        case FitnessMode::linear: return "linear";
        case FitnessMode::sigmoid_literal: return "sigmoid_literal";
        case FitnessMode::sigmoid: break;
    }
    return "sigmoid";
}

inline MutationStep mutation_step_from(const std::string& s) {
    if (s == "adaptive") return MutationStep::adaptive;
    if (s == "fixed") return MutationStep::fixed;
    if (s == "none") return MutationStep::none;
    throw ConfigError("unknown mutation step '" + s + "'");
}

}  // namespace detail

inline RunMode run_mode_from(const std::string& s) {
    if (s == "ccl") return RunMode::ccl;
    if (s == "vanilla") return RunMode::vanilla;
    throw ConfigError("unknown mode '" + s + "' (expected ccl or vanilla)");
}

inline InitRegion init_region_from(const std::string& s) {
    if (s == "uniform") return InitRegion::uniform;
    if (s == "target_goals") return InitRegion::target_goals;
    throw ConfigError("unknown init_region '" + s + "'");
}

inline ExperimentConfig config_from_json(const json& j) {
    using detail::read;
    using detail::read_count;
    detail::reject_unknown(j,
                           {"mode", "seed", "epochs", "episodes_per_task", "eval_episodes", "init_delta",
                            "init_region", "snapshot_interval", "output_dir", "target", "env", "evolution",
                            "fitness", "learner"},
                           "config");
    ExperimentConfig c;
    std::string s;
    if (j.contains("mode")) {
        read(j, "mode", s, "config");
        c.mode = run_mode_from(s);
    }
    read(j, "seed", c.seed, "config");
    read(j, "epochs", c.epochs, "config");
    read(j, "episodes_per_task", c.episodes_per_task, "config");
    read(j, "eval_episodes", c.eval_episodes, "config");
    read(j, "init_delta", c.init_delta, "config");
    if (j.contains("init_region")) {
        read(j, "init_region", s, "config");
        c.init_region = init_region_from(s);
    }
    read(j, "snapshot_interval", c.snapshot_interval, "config");
    read(j, "output_dir", c.output_dir, "config");
    if (j.contains("target") && !j.at("target").is_null()) {
        std::vector<double> flat;
        read(j, "target", flat, "config");
        c.target = TaskGenome::from_flat(flat);
    }

    if (j.contains("env")) {
        const json& e = j.at("env");
        detail::reject_unknown(e, {"grid_width", "n_agents", "horizon", "allow_collisions"}, "env");
        read(e, "grid_width", c.env.grid_width, "env");
        read_count(e, "n_agents", c.env.n_agents, "env");
        read(e, "horizon", c.env.horizon, "env");
        read(e, "allow_collisions", c.env.allow_collisions, "env");
    }
    if (j.contains("evolution")) {
        const json& e = j.at("evolution");
        detail::reject_unknown(e,
                               {"population_size", "sample_size", "alpha_new", "neighbours", "sigma_max", "band_low",
                                "band_high", "mutation_step"},
                               "evolution");
        read_count(e, "population_size", c.evolution.population_size, "evolution");
        read_count(e, "sample_size", c.evolution.sample_size, "evolution");
        read(e, "alpha_new", c.evolution.alpha_new, "evolution");
        read_count(e, "neighbours", c.evolution.neighbours, "evolution");
        read(e, "sigma_max", c.evolution.sigma_max, "evolution");
        read(e, "band_low", c.evolution.band_low, "evolution");
        read(e, "band_high", c.evolution.band_high, "evolution");
        if (e.contains("mutation_step")) {
            read(e, "mutation_step", s, "evolution");
            c.evolution.mutation_step = detail::mutation_step_from(s);
        }
    }
    if (j.contains("fitness")) {
        const json& f = j.at("fitness");
        detail::reject_unknown(f, {"mode", "gain", "linear_slope"}, "fitness");
        if (f.contains("mode")) {
            read(f, "mode", s, "fitness");
            c.fitness.mode = detail::fitness_mode_from(s);
        }
        read(f, "gain", c.fitness.gain, "fitness");
        read(f, "linear_slope", c.fitness.linear_slope, "fitness");
    }
    if (j.contains("learner")) {
        const json& l = j.at("learner");
        detail::reject_unknown(l,
                               {"learning_rate", "discount", "epsilon_start", "epsilon_decay", "epsilon_floor",
                                "workers"},
                               "learner");
        read(l, "learning_rate", c.learner.learning_rate, "learner");
        read(l, "discount", c.learner.discount, "learner");
        read(l, "epsilon_start", c.learner.epsilon_start, "learner");
        read(l, "epsilon_decay", c.learner.epsilon_decay, "learner");
        read(l, "epsilon_floor", c.learner.epsilon_floor, "learner");
        read_count(l, "workers", c.learner.workers, "learner");
    }
    c.validate();
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["mode"] = std::string(to_string(c.mode));
    j["seed"] = c.seed;
    j["epochs"] = c.epochs;
    j["episodes_per_task"] = c.episodes_per_task;
    j["eval_episodes"] = c.eval_episodes;
    j["init_delta"] = c.init_delta;
    j["init_region"] = std::string(to_string(c.init_region));
    j["snapshot_interval"] = c.snapshot_interval;
    j["output_dir"] = c.output_dir;
    j["target"] = c.target_task().flat();
    j["env"] = {{"grid_width", c.env.grid_width},
                {"n_agents", c.env.n_agents},
                {"horizon", c.env.horizon},
                {"allow_collisions", c.env.allow_collisions}};
    j["evolution"] = {{"population_size", c.evolution.population_size},
                      {"sample_size", c.evolution.sample_size},
                      {"alpha_new", c.evolution.alpha_new},
                      {"neighbours", c.evolution.neighbours},
                      {"sigma_max", c.evolution.sigma_max},
                      {"band_low", c.evolution.band_low},
                      {"band_high", c.evolution.band_high},
                      {"mutation_step", std::string(to_string(c.evolution.mutation_step))}};
    j["fitness"] = {{"mode", std::string(detail::to_string(c.fitness.mode))},
                    {"gain", c.fitness.gain},
                    {"linear_slope", c.fitness.linear_slope}};
    j["learner"] = {{"learning_rate", c.learner.learning_rate},
                    {"discount", c.learner.discount},
                    {"epsilon_start", c.learner.epsilon_start},
                    {"epsilon_decay", c.learner.epsilon_decay},
                    {"epsilon_floor", c.learner.epsilon_floor},
                    {"workers", c.learner.workers}};
    return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

/// Keys that may differ between a snapshot and the config resuming it.
inline json trajectory_relevant(json j) {
    for (const char* k : {"epochs", "output_dir", "snapshot_interval"}) j.erase(k);
    j["learner"].erase("workers");
    return j;
}

}  // namespace ccl
