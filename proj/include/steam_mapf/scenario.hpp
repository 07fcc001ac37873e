#pragma once

#include "steam_mapf/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace steam_mapf {

struct AgentTask {
    Vertex start;
    Vertex goal;

    friend bool operator==(const AgentTask&, const AgentTask&) = default;
};

inline constexpr int kDefaultMaxSteps = 256;

struct Scenario {
    GridMap map;
    std::vector<AgentTask> agents;
    std::uint64_t seed = 0;
    int max_steps = kDefaultMaxSteps;

    std::size_t agent_count() const { return agents.size(); }
    std::vector<Vertex> starts() const;
    std::vector<Vertex> goals() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws Error naming the first offending agent: OutOfBounds,
/// StartOnObstacle, GoalOnObstacle, DuplicateStart, DuplicateGoal or
/// GoalUnreachable. Also rejects max_steps < 1 (InvalidConfig).
void validate_scenario(const Scenario& s);

/// Scenario file: {"map_path": ..., "agents": [[sr,sc,gr,gc], ...],
/// "seed": ..., "max_steps": ...}. A relative map_path is resolved against
/// the scenario file's directory.
Scenario load_scenario(const std::string& path);

/// Writes `map_file_name` (relative to the scenario's directory) into the
/// scenario document; the caller is responsible for writing the map itself.
std::string scenario_to_json(const Scenario& s, const std::string& map_file_name);

} // namespace steam_mapf
