#pragma once

#include "steam_mapf/config.hpp"
#include "steam_mapf/executor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace steam_mapf {

/// Seed of episode k under a master seed.
constexpr std::uint64_t episode_seed(std::uint64_t master, std::size_t index) {
    return master ^ static_cast<std::uint64_t>(index);
}

struct ArmResult {
    std::string name;  // "steam" or "baseline"
    bool steam = false;
    ArmSummary summary;
    std::vector<EpisodeReport> episodes;
};

struct BenchReport {
    RunConfig config;
    std::vector<std::uint64_t> seeds;
    std::vector<ArmResult> arms;
    std::optional<PairedDelta> delta;  // both arms only
};

/// Scenario of episode k: generated with the episode seed, or files[k mod n].
/// `files` holds the already loaded scenario files.
Scenario bench_scenario(const RunConfig& config, const std::vector<Scenario>& files, std::size_t index);

/// Runs every (episode, arm) pair on up to `jobs` threads. Results do not
/// depend on `jobs`.
BenchReport run_bench(const RunConfig& config, int jobs);

/// Jobs from STEAM_MAPF_JOBS, or 1.
int default_jobs();

/// Run-length encoded trajectory: [[row, col, repeat], ...].
Json encode_trajectory(const std::vector<Vertex>& trajectory);

/// Episode document. Wall-clock values live under "timing" keys only.
Json to_json(const EpisodeReport& r, bool with_trajectories, bool with_trace);
Json to_json(const ArmSummary& s);
Json to_json(const PairedDelta& d);
Json to_json(const BenchReport& b);

/// Drops every "timing" member, recursively.
Json strip_timing(Json j);

/// One row per arm plus a delta row when both arms ran.
std::string to_csv(const BenchReport& b);

/// Plain-text table of the arm summaries and delta of a saved bench document.
std::string render_report(const Json& bench);

} // namespace steam_mapf
