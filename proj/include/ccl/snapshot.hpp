#pragma once

// Snapshot files: JSON lines. The first line is a header carrying the run
// configuration and counters; every other line is one task record
//   {"kind":"task","set":...,"generation":g,"id":..,"epoch":..,"genome":[..],"r":..,"f":..,"origin":..}
// The policy table lives next to it in a little-endian binary file.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccl/config_io.hpp"
#include "ccl/errors.hpp"
#include "ccl/experiment.hpp"

namespace ccl {

inline constexpr int kSnapshotFormat = 1;

struct Snapshot {
    ExperimentConfig config;
    RunState state;
    PolicyTable policy;
};

namespace detail {

inline json record_to_json(const TaskRecord& rec, std::string_view set, std::size_t generation) {
    json j;
    j["kind"] = "task";
    j["set"] = std::string(set);
    j["generation"] = generation;
    j["id"] = rec.id;
    j["epoch"] = rec.epoch_born;
    j["genome"] = rec.genome.flat();
    j["r"] = rec.r ? json(*rec.r) : json(nullptr);
    j["f"] = rec.f;
    j["origin"] = std::string(to_string(rec.origin));
    return j;
}

inline TaskRecord record_from_json(const json& j) {
    TaskRecord rec;
    rec.id = j.at("id").get<std::uint64_t>();
    rec.epoch_born = j.at("epoch").get<std::uint64_t>();
    rec.genome = TaskGenome::from_flat(j.at("genome").get<std::vector<double>>());
    if (!j.at("r").is_null()) rec.r = j.at("r").get<double>();
    rec.f = j.at("f").get<double>();
    rec.origin = origin_from_string(j.at("origin").get<std::string>());
    return rec;
}

static_assert(std::endian::native == std::endian::little, "policy files are written little-endian");

inline constexpr char kPolicyMagic[4] = {'C', 'C', 'L', 'Q'};

}  // namespace detail

inline void save_policy(const PolicyTable& policy, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write policy file " + path.string());
    const std::uint64_t agents = policy.n_agents();
    const std::int64_t width = policy.width();
    const std::uint64_t count = policy.raw().size();
    out.write(detail::kPolicyMagic, 4);
    out.write(reinterpret_cast<const char*>(&agents), sizeof agents);
    out.write(reinterpret_cast<const char*>(&width), sizeof width);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(policy.raw().data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw ConfigError("failed writing policy file " + path.string());
}

inline PolicyTable load_policy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open policy file " + path.string());
    char magic[4];
    std::uint64_t agents = 0;
    std::int64_t width = 0;
    std::uint64_t count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&agents), sizeof agents);
    in.read(reinterpret_cast<char*>(&width), sizeof width);
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!in || std::memcmp(magic, detail::kPolicyMagic, 4) != 0 || width < 2 || width > 1024) {
        throw ConfigError("malformed policy file " + path.string());
    }
    PolicyTable policy(agents, static_cast<int>(width));
    if (policy.raw().size() != count) throw ConfigError("policy file size mismatch in " + path.string());
    in.read(reinterpret_cast<char*>(policy.raw().data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ConfigError("truncated policy file " + path.string());
    return policy;
}

/// Writes `<dir>/snapshot_eNNNNNN.jsonl` and its policy file; returns the snapshot path.
inline std::filesystem::path save_snapshot(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                           const RunState& state, const PolicyTable& policy) {
    std::filesystem::create_directories(dir);
    char stem[32];
    std::snprintf(stem, sizeof stem, "e%06llu", static_cast<unsigned long long>(state.epoch));
    const std::string policy_name = std::string("policy_") + stem + ".bin";
    const auto path = dir / (std::string("snapshot_") + stem + ".jsonl");
    save_policy(policy, dir / policy_name);

    json header;
    header["kind"] = "header";
    header["format"] = kSnapshotFormat;
    header["epoch"] = state.epoch;
    header["config"] = config_to_json(cfg);
    header["policy_file"] = policy_name;
    header["cumulative_episodes"] = state.cumulative_episodes;
    header["cumulative_steps"] = state.cumulative_steps;
    header["batch_new"] = state.batch_new;
    header["batch_old"] = state.batch_old;
    const auto& c = state.counters;
    header["counters"] = {{"initializations", c.initializations}, {"pairings", c.pairings},
                          {"crossovers", c.crossovers},           {"mutations", c.mutations},
                          {"deletions", c.deletions},             {"estimates", c.estimates},
                          {"selections", c.selections}};
    if (state.population) {
        header["population_epoch"] = state.population->epoch;
        header["next_id"] = state.population->next_id;
    }

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write snapshot " + path.string());
    out << header.dump() << '\n';
    if (state.population) {
        const Population& pop = *state.population;
        for (const auto& r : pop.active) out << detail::record_to_json(r, "active", pop.epoch).dump() << '\n';
        for (const auto& r : pop.removed) out << detail::record_to_json(r, "removed", pop.epoch).dump() << '\n';
        for (std::size_t g = 0; g < pop.archive.size(); ++g) {
            for (const auto& r : pop.archive[g]) out << detail::record_to_json(r, "archive", g).dump() << '\n';
        }
    }
    for (const auto& r : state.batch) out << detail::record_to_json(r, "batch", state.epoch).dump() << '\n';
    if (!out) throw ConfigError("failed writing snapshot " + path.string());
    return path;
}

inline Snapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open snapshot " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty snapshot " + path.string());
    try {
        const json header = json::parse(line);
        if (header.at("kind") != "header" || header.at("format").get<int>() != kSnapshotFormat) {
            throw ConfigError("unsupported snapshot header in " + path.string());
        }
        Snapshot snap;
        snap.config = config_from_json(header.at("config"));
        RunState& st = snap.state;
        st.epoch = header.at("epoch").get<std::uint64_t>();
        st.cumulative_episodes = header.at("cumulative_episodes").get<std::uint64_t>();
        st.cumulative_steps = header.at("cumulative_steps").get<std::uint64_t>();
        st.batch_new = header.at("batch_new").get<std::size_t>();
        st.batch_old = header.at("batch_old").get<std::size_t>();
        const json& c = header.at("counters");
        st.counters = {c.at("initializations").get<std::uint64_t>(), c.at("pairings").get<std::uint64_t>(),
                       c.at("crossovers").get<std::uint64_t>(),      c.at("mutations").get<std::uint64_t>(),
                       c.at("deletions").get<std::uint64_t>(),       c.at("estimates").get<std::uint64_t>(),
                       c.at("selections").get<std::uint64_t>()};
        if (header.contains("population_epoch")) {
            Population pop;
            pop.epoch = header.at("population_epoch").get<std::uint64_t>();
            pop.next_id = header.at("next_id").get<std::uint64_t>();
            st.population = std::move(pop);
        }
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            const std::string set = j.at("set").get<std::string>();
            TaskRecord rec = detail::record_from_json(j);
            if (set == "batch") {
                st.batch.push_back(std::move(rec));
                continue;
            }
            if (!st.population) throw ConfigError("population record in a vanilla snapshot");
            Population& pop = *st.population;
            if (set == "active") {
                pop.active.push_back(std::move(rec));
            } else if (set == "removed") {
                pop.removed.push_back(std::move(rec));
            } else if (set == "archive") {
                const auto g = j.at("generation").get<std::size_t>();
                if (pop.archive.size() <= g) pop.archive.resize(g + 1);
                pop.archive[g].push_back(std::move(rec));
            } else {
                throw ConfigError("unknown record set '" + set + "'");
            }
        }
        snap.policy = load_policy(path.parent_path() / header.at("policy_file").get<std::string>());
        return snap;
    } catch (const json::exception& e) {
        throw ConfigError("malformed snapshot " + path.string() + ": " + e.what());
    }
}

}  // namespace ccl
