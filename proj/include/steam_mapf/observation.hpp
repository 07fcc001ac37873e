#pragma once

#include "steam_mapf/cost_field.hpp"
#include "steam_mapf/grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace steam_mapf {

/// Cell -> agent lookup for one simulation step.
class Occupancy {
public:
    Occupancy(const GridMap& map, std::span<const Vertex> positions);

    static constexpr std::int32_t kNone = -1;

    std::int32_t agent_at(Vertex v) const;
    Vertex position(std::size_t agent) const { return positions_[agent]; }
    std::size_t agent_count() const { return positions_.size(); }
    std::span<const Vertex> positions() const { return positions_; }

private:
    int width_;
    int height_;
    std::vector<std::int32_t> cells_;
    std::vector<Vertex> positions_;
};

struct Observation {
    Vertex center;
    Vertex goal;
    WindowGrid<std::uint8_t> obstacles;  // 1 for blocked or off-map
    WindowGrid<std::uint8_t> agents;     // 1 for cells holding another agent
    WindowGrid<double> cost;             // relative cost-to-go, +inf sentinel

    int window() const { return cost.window; }
};

/// Assembles the local observation of `agent`. `cost_channel` is passed
/// through unchanged, so the caller decides whether it is the raw or the
/// congestion-corrected channel.
Observation build_observation(const GridMap& map, const Occupancy& occupancy, std::size_t agent, Vertex goal,
                              WindowGrid<double> cost_channel);

} // namespace steam_mapf
