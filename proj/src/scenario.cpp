#include "steam_mapf/scenario.hpp"

#include "steam_mapf/error.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <unordered_map>

namespace steam_mapf {

std::vector<Vertex> Scenario::starts() const {
    std::vector<Vertex> out;
    out.reserve(agents.size());
    for (const auto& a : agents) {
        out.push_back(a.start);
    }
    return out;
}

std::vector<Vertex> Scenario::goals() const {
    std::vector<Vertex> out;
    out.reserve(agents.size());
    for (const auto& a : agents) {
        out.push_back(a.goal);
    }
    return out;
}

void validate_scenario(const Scenario& s) {
    if (s.max_steps < 1) {
        throw Error(ErrorCode::InvalidConfig, "max_steps must be positive");
    }
    std::unordered_map<Vertex, std::size_t> starts;
    std::unordered_map<Vertex, std::size_t> goals;
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        const auto& a = s.agents[i];
        const auto who = "agent " + std::to_string(i);
        if (!s.map.in_bounds(a.start) || !s.map.in_bounds(a.goal)) {
            throw Error(ErrorCode::OutOfBounds, who + " has a start or goal outside the map", i);
        }
        if (s.map.blocked(a.start)) {
            throw Error(ErrorCode::StartOnObstacle, who + " starts on an obstacle " + to_string(a.start), i);
        }
        if (s.map.blocked(a.goal)) {
            throw Error(ErrorCode::GoalOnObstacle, who + " has its goal on an obstacle " + to_string(a.goal), i);
        }
        if (!starts.emplace(a.start, i).second) {
            throw Error(ErrorCode::DuplicateStart, who + " shares its start " + to_string(a.start), i);
        }
        if (!goals.emplace(a.goal, i).second) {
            throw Error(ErrorCode::DuplicateGoal, who + " shares its goal " + to_string(a.goal), i);
        }
    }
    const auto labels = component_labels(s.map);
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        const auto& a = s.agents[i];
        if (labels[s.map.index(a.start)] != labels[s.map.index(a.goal)]) {
            throw Error(ErrorCode::GoalUnreachable, "agent " + std::to_string(i) + " cannot reach its goal", i);
        }
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open scenario file '" + path + "'");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }

    Scenario s;
    try {
        std::filesystem::path map_path = doc.at("map_path").get<std::string>();
        if (map_path.is_relative()) {
            map_path = std::filesystem::path(path).parent_path() / map_path;
        }
        s.map = load_map(map_path.string());
        for (const auto& row : doc.at("agents")) {
            if (!row.is_array() || row.size() != 4) {
                throw Error(ErrorCode::InvalidConfig, path + ": each agent must be [sr, sc, gr, gc]");
            }
            s.agents.push_back({{row[0].get<int>(), row[1].get<int>()}, {row[2].get<int>(), row[3].get<int>()}});
        }
        s.seed = doc.value("seed", std::uint64_t{0});
        s.max_steps = doc.value("max_steps", kDefaultMaxSteps);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
    return s;
}

std::string scenario_to_json(const Scenario& s, const std::string& map_file_name) {
    nlohmann::ordered_json doc;
    doc["map_path"] = map_file_name;
    auto agents = nlohmann::ordered_json::array();
    for (const auto& a : s.agents) {
        agents.push_back({a.start.row, a.start.col, a.goal.row, a.goal.col});
    }
    doc["agents"] = std::move(agents);
    doc["seed"] = s.seed;
    doc["max_steps"] = s.max_steps;
    return doc.dump(2) + "\n";
}

} // namespace steam_mapf
