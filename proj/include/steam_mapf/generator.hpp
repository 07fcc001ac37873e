#pragma once

#include "steam_mapf/scenario.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace steam_mapf {

enum class MapFamily { Random, Maze, Warehouse };

std::string_view to_string(MapFamily f);
std::optional<MapFamily> parse_family(std::string_view name);

struct GenSpec {
    MapFamily family = MapFamily::Random;
    int width = 32;
    int height = 32;
    double obstacle_density = 0.2;  // ignored by Warehouse
    int agent_count = 16;
    std::uint64_t seed = 0;

    /// Default dimensions for a family: 32x32 random, 40x40 maze, 46x33 warehouse.
    static GenSpec defaults(MapFamily family);

    /// Throws InvalidConfig.
    void validate() const;

    friend bool operator==(const GenSpec&, const GenSpec&) = default;
};

/// Deterministic in `spec`. Starts and goals are distinct cells drawn from
/// the largest connected component. Throws Infeasible when the agents do not
/// fit after a bounded number of attempts.
Scenario generate(const GenSpec& spec);

/// Maze layout alone: a recursive-division maze braided or dead-end filled
/// until exactly round(density * cells) cells are blocked (when reachable).
GridMap generate_maze(int width, int height, double density, std::uint64_t seed);

/// Shelf template: a 2-cell margin, then 2x5 shelves separated by 1-wide
/// aisles between columns and 2-wide aisles between rows.
GridMap generate_warehouse(int width, int height);

} // namespace steam_mapf
