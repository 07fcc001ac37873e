#pragma once

// Reference implementations used only by the tests. Each one is deliberately
// naive and shares no code with the library.

#include "steam_mapf/grid.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using steam_mapf::GridMap;
using steam_mapf::Vertex;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::vector<Vertex> neighbors(const GridMap& map, Vertex v) {
    std::vector<Vertex> out;
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
        const Vertex u{v.row + dr[k], v.col + dc[k]};
        if (map.free(u)) {
            out.push_back(u);
        }
    }
    return out;
}

inline GridMap random_map(int width, int height, double density, std::mt19937_64& rng) {
    std::bernoulli_distribution wall(density);
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(width) * height);
    for (auto& c : cells) {
        c = wall(rng) ? 1 : 0;
    }
    return GridMap(width, height, std::move(cells));
}

inline std::vector<Vertex> free_cells(const GridMap& map) {
    std::vector<Vertex> out;
    for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c) {
            if (map.free({r, c})) {
                out.push_back({r, c});
            }
        }
    }
    return out;
}

/// Hop distance to `target`, -1 where unreachable.
inline std::vector<int> bfs_hops(const GridMap& map, Vertex target) {
    std::vector<int> dist(map.cell_count(), -1);
    std::deque<Vertex> queue{target};
    dist[map.index(target)] = 0;
    while (!queue.empty()) {
        const Vertex v = queue.front();
        queue.pop_front();
        for (Vertex u : neighbors(map, v)) {
            if (dist[map.index(u)] < 0) {
                dist[map.index(u)] = dist[map.index(v)] + 1;
                queue.push_back(u);
            }
        }
    }
    return dist;
}

/// Entered-vertex cost to `target` by O(V^2) Dijkstra, optionally with one
/// vertex removed from the graph.
inline std::vector<double> slow_costs(const GridMap& map, const std::vector<double>& w, Vertex target,
                                      std::optional<Vertex> removed = std::nullopt) {
    const std::size_t n = map.cell_count();
    std::vector<double> dist(n, kInf);
    std::vector<bool> done(n, false);
    dist[map.index(target)] = 0.0;
    for (;;) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!done[i] && dist[i] < kInf && (best == n || dist[i] < dist[best])) {
                best = i;
            }
        }
        if (best == n) {
            return dist;
        }
        done[best] = true;
        const Vertex v = map.vertex(best);
        for (Vertex u : neighbors(map, v)) {
            if (removed && u == *removed) {
                continue;
            }
            const double through = dist[best] + w[best];
            if (through < dist[map.index(u)]) {
                dist[map.index(u)] = through;
            }
        }
    }
}

/// Minimum over every simple path from `from` to `to` of the entered-vertex
/// weight sum, by exhaustive depth-first enumeration. Small maps only.
inline double min_simple_path_cost(const GridMap& map, const std::vector<double>& w, Vertex from, Vertex to) {
    std::vector<bool> on_path(map.cell_count(), false);
    double best = kInf;
    auto dfs = [&](auto&& self, Vertex v, double cost) -> void {
        if (v == to) {
            best = std::min(best, cost);
            return;
        }
        on_path[map.index(v)] = true;
        for (Vertex u : neighbors(map, v)) {
            if (!on_path[map.index(u)]) {
                self(self, u, cost + w[map.index(u)]);
            }
        }
        on_path[map.index(v)] = false;
    };
    dfs(dfs, from, 0.0);
    return best;
}

/// Whether some simple path from `from` to `to` never enters `avoid`.
inline bool path_avoiding_exists(const GridMap& map, Vertex from, Vertex to, Vertex avoid) {
    if (from == avoid || to == avoid) {
        return false;
    }
    std::vector<bool> seen(map.cell_count(), false);
    std::vector<Vertex> stack{from};
    seen[map.index(from)] = true;
    while (!stack.empty()) {
        const Vertex v = stack.back();
        stack.pop_back();
        if (v == to) {
            return true;
        }
        for (Vertex u : neighbors(map, v)) {
            if (u != avoid && !seen[map.index(u)]) {
                seen[map.index(u)] = true;
                stack.push_back(u);
            }
        }
    }
    return false;
}

/// Minimum vertex cover by enumerating all subsets of the `n` agents; among
/// minimum covers the lexicographically smallest sorted index list.
inline std::vector<std::size_t> brute_force_cover(const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                                  std::size_t n) {
    std::optional<std::vector<std::size_t>> best;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        bool covers = true;
        for (auto [a, b] : edges) {
            if (!((mask >> a) & 1u) && !((mask >> b) & 1u)) {
                covers = false;
                break;
            }
        }
        if (!covers) {
            continue;
        }
        std::vector<std::size_t> set;
        for (std::size_t k = 0; k < n; ++k) {
            if ((mask >> k) & 1u) {
                set.push_back(k);
            }
        }
        if (!best || set.size() < best->size() || (set.size() == best->size() && set < *best)) {
            best = set;
        }
    }
    return *best;
}

} // namespace oracle
