#include "steam_mapf/observation.hpp"

#include "steam_mapf/error.hpp"

namespace steam_mapf {

Occupancy::Occupancy(const GridMap& map, std::span<const Vertex> positions)
    : width_(map.width()), height_(map.height()), cells_(map.cell_count(), kNone),
      positions_(positions.begin(), positions.end()) {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        auto& slot = cells_[map.index(positions_[i])];
        if (slot != kNone) {
            throw Error(ErrorCode::InvalidConfig, "two agents occupy " + to_string(positions_[i]));
        }
        slot = static_cast<std::int32_t>(i);
    }
}

std::int32_t Occupancy::agent_at(Vertex v) const {
    if (v.row < 0 || v.row >= height_ || v.col < 0 || v.col >= width_) {
        return kNone;
    }
    return cells_[static_cast<std::size_t>(v.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(v.col)];
}

Observation build_observation(const GridMap& map, const Occupancy& occupancy, std::size_t agent, Vertex goal,
                              WindowGrid<double> cost_channel) {
    const int window = cost_channel.window;
    Observation obs{occupancy.position(agent), goal, WindowGrid<std::uint8_t>(window, 0),
                    WindowGrid<std::uint8_t>(window, 0), std::move(cost_channel)};
    const int r = obs.cost.radius();
    const auto self = static_cast<std::int32_t>(agent);
    for (int dr = -r; dr <= r; ++dr) {
        for (int dc = -r; dc <= r; ++dc) {
            const Vertex v{obs.center.row + dr, obs.center.col + dc};
            if (!map.free(v)) {
                obs.obstacles.at(dr, dc) = 1;
                continue;
            }
            const auto who = occupancy.agent_at(v);
            if (who != Occupancy::kNone && who != self) {
                obs.agents.at(dr, dc) = 1;
            }
        }
    }
    return obs;
}

} // namespace steam_mapf
