#pragma once

#include "steam_mapf/generator.hpp"
#include "steam_mapf/policy.hpp"
#include "steam_mapf/steam.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace steam_mapf {

using Json = nlohmann::ordered_json;

enum class DistanceNorm { Chebyshev, Manhattan };

/// Everything that shapes one episode apart from the scenario and the seed.
struct EpisodeOptions {
    PolicyConfig policy;
    std::optional<SteamConfig> steam;  // empty: bare policy
    int observation_radius = 5;
    int density_radius = 5;
    DistanceNorm density_norm = DistanceNorm::Chebyshev;
    bool record_trace = false;

    void validate() const;
};

enum class Arms { Both, On, Off };
enum class ReportFormat { Json, Csv };

/// Benchmark / run configuration file. Scenarios come either from a list of
/// files (episode k uses files[k mod n]) or from a generator spec whose seed
/// is replaced per episode.
struct RunConfig {
    std::vector<std::string> scenario_files;
    std::optional<GenSpec> generator;
    PolicyConfig policy;
    SteamConfig steam;
    Arms arms = Arms::Both;
    int episodes = 128;
    std::uint64_t seed = 0;
    std::optional<int> max_steps;  // overrides the scenario's own limit
    int observation_radius = 5;
    int density_radius = 5;
    DistanceNorm density_norm = DistanceNorm::Chebyshev;
    std::string output;
    ReportFormat format = ReportFormat::Json;

    void validate() const;
    EpisodeOptions episode_options(bool steam_on) const;
};

Json to_json(const PolicyConfig& c);
Json to_json(const SteamConfig& c);
Json to_json(const GenSpec& g);
Json to_json(const RunConfig& c);

/// Reads a RunConfig. Missing keys take defaults, unknown keys are errors.
/// Failures throw InvalidConfig naming the line/column or the field path.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);

/// Canonical text: every field present, fixed key order, two-space indent.
std::string serialize_run_config(const RunConfig& c);

/// FNV-1a 64 of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// Identifies the episode configuration (policy, STEAM settings, radii,
/// step limit and arbitration rule) in reports.
std::uint64_t config_hash(const EpisodeOptions& options, int max_steps);

std::string_view to_string(DistanceNorm n);
std::string_view to_string(Arms a);
std::string_view to_string(ReportFormat f);
std::string hex64(std::uint64_t x);

} // namespace steam_mapf
