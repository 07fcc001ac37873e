#include "steam_mapf/generator.hpp"

#include "steam_mapf/error.hpp"
#include "steam_mapf/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace steam_mapf {

namespace {

constexpr int kMaxAttempts = 100;

std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t k = items.size(); k > 1; --k) {
        std::swap(items[k - 1], items[below(rng, k)]);
    }
}

std::vector<std::size_t> largest_component(const GridMap& map) {
    const auto labels = component_labels(map);
    std::map<int, std::size_t> sizes;
    for (int l : labels) {
        if (l >= 0) {
            ++sizes[l];
        }
    }
    int best = -1;
    std::size_t best_size = 0;
    for (auto [l, n] : sizes) {
        if (n > best_size) {
            best = l;
            best_size = n;
        }
    }
    std::vector<std::size_t> cells;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == best && best >= 0) {
            cells.push_back(k);
        }
    }
    return cells;
}

/// Draws 2N distinct cells; the first N become starts, the rest goals.
std::vector<AgentTask> place_agents(const GridMap& map, std::vector<std::size_t> cells, int count, Rng& rng) {
    const auto n = static_cast<std::size_t>(count);
    for (std::size_t k = 0; k < 2 * n; ++k) {
        std::swap(cells[k], cells[k + below(rng, cells.size() - k)]);
    }
    std::vector<AgentTask> agents(n);
    for (std::size_t i = 0; i < n; ++i) {
        agents[i] = {map.vertex(cells[i]), map.vertex(cells[n + i])};
    }
    return agents;
}

int free_neighbors(const std::vector<std::uint8_t>& blocked, int width, int height, int r, int c) {
    int n = 0;
    for (Action a : kActions) {
        if (a == Action::Wait) {
            continue;
        }
        const Vertex v = step({r, c}, a);
        if (v.row >= 0 && v.row < height && v.col >= 0 && v.col < width &&
            !blocked[static_cast<std::size_t>(v.row * width + v.col)]) {
            ++n;
        }
    }
    return n;
}

} // namespace

std::string_view to_string(MapFamily f) {
    switch (f) {
    case MapFamily::Random: return "random";
    case MapFamily::Maze: return "maze";
    case MapFamily::Warehouse: return "warehouse";
    }
    return "?";
}

std::optional<MapFamily> parse_family(std::string_view name) {
    for (auto f : {MapFamily::Random, MapFamily::Maze, MapFamily::Warehouse}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

GenSpec GenSpec::defaults(MapFamily family) {
    GenSpec spec;
    spec.family = family;
    switch (family) {
    case MapFamily::Random: spec.width = 32; spec.height = 32; break;
    case MapFamily::Maze: spec.width = 40; spec.height = 40; spec.obstacle_density = 0.5; break;
    case MapFamily::Warehouse: spec.width = 46; spec.height = 33; spec.obstacle_density = 0.0; break;
    }
    return spec;
}

void GenSpec::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, "gen." + what); };
    if (width < 1 || height < 1) fail("width and height must be positive");
    if (family == MapFamily::Maze && (width < 3 || height < 3)) fail("maze maps need at least 3x3 cells");
    if (!(obstacle_density >= 0.0 && obstacle_density < 1.0)) fail("obstacle_density must be in [0, 1)");
    if (agent_count < 1) fail("agent_count must be >= 1");
    if (2 * static_cast<long>(agent_count) > static_cast<long>(width) * height) {
        fail("agent_count must leave room for distinct starts and goals");
    }
}

GridMap generate_maze(int width, int height, double density, std::uint64_t seed) {
    Rng rng(seed);
    const auto at = [width](int r, int c) { return static_cast<std::size_t>(r * width + c); };
    // Rooms sit on even coordinates, corners on odd/odd, and the cells in
    // between are the walls that the division opens or closes.
    const int room_rows = (height + 1) / 2;
    const int room_cols = (width + 1) / 2;
    std::vector<std::uint8_t> blocked(static_cast<std::size_t>(width) * height, 0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const bool corner = (r % 2 == 1) && (c % 2 == 1);
            const bool dangling = (r % 2 == 1 && r == height - 1) || (c % 2 == 1 && c == width - 1);
            blocked[at(r, c)] = (corner || dangling) ? 1 : 0;
        }
    }

    struct Region {
        int r0, c0, r1, c1;  // inclusive room coordinates
    };
    std::vector<Region> stack{{0, 0, room_rows - 1, room_cols - 1}};
    while (!stack.empty()) {
        const Region g = stack.back();
        stack.pop_back();
        const int rows = g.r1 - g.r0 + 1;
        const int cols = g.c1 - g.c0 + 1;
        if (rows < 2 && cols < 2) {
            continue;
        }
        const bool horizontal = rows > cols || (rows == cols && (rng() & 1u));
        if (horizontal) {
            const int k = g.r0 + static_cast<int>(below(rng, static_cast<std::size_t>(rows - 1)));
            const int gap = g.c0 + static_cast<int>(below(rng, static_cast<std::size_t>(cols)));
            for (int c = g.c0; c <= g.c1; ++c) {
                blocked[at(2 * k + 1, 2 * c)] = c == gap ? 0 : 1;
            }
            stack.push_back({g.r0, g.c0, k, g.c1});
            stack.push_back({k + 1, g.c0, g.r1, g.c1});
        } else {
            const int k = g.c0 + static_cast<int>(below(rng, static_cast<std::size_t>(cols - 1)));
            const int gap = g.r0 + static_cast<int>(below(rng, static_cast<std::size_t>(rows)));
            for (int r = g.r0; r <= g.r1; ++r) {
                blocked[at(2 * r, 2 * k + 1)] = r == gap ? 0 : 1;
            }
            stack.push_back({g.r0, g.c0, g.r1, k});
            stack.push_back({g.r0, k + 1, g.r1, g.c1});
        }
    }

    const auto total = blocked.size();
    const auto target = static_cast<std::size_t>(std::llround(density * static_cast<double>(total)));
    auto count = static_cast<std::size_t>(std::count(blocked.begin(), blocked.end(), std::uint8_t{1}));

    if (count > target) {
        // Braid: open walls first, which only adds loops, then corners and
        // the dangling border.
        std::vector<std::size_t> walls;
        std::vector<std::size_t> rest;
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                if (!blocked[at(r, c)]) {
                    continue;
                }
                const bool dangling = (r % 2 == 1 && r == height - 1) || (c % 2 == 1 && c == width - 1);
                ((r + c) % 2 == 1 && !dangling ? walls : rest).push_back(at(r, c));
            }
        }
        shuffle(walls, rng);
        shuffle(rest, rng);
        walls.insert(walls.end(), rest.begin(), rest.end());
        for (std::size_t k = 0; k < walls.size() && count > target; ++k) {
            blocked[walls[k]] = 0;
            --count;
        }
    } else {
        // Fill dead ends one at a time; removing a leaf never disconnects.
        while (count < target) {
            std::vector<std::size_t> dead_ends;
            for (int r = 0; r < height; ++r) {
                for (int c = 0; c < width; ++c) {
                    if (!blocked[at(r, c)] && free_neighbors(blocked, width, height, r, c) <= 1) {
                        dead_ends.push_back(at(r, c));
                    }
                }
            }
            if (dead_ends.empty() || total - count <= 2) {
                break;
            }
            blocked[dead_ends[below(rng, dead_ends.size())]] = 1;
            ++count;
        }
    }
    return GridMap(width, height, std::move(blocked));
}

GridMap generate_warehouse(int width, int height) {
    constexpr int kMargin = 2;
    constexpr int kShelfRows = 2;
    constexpr int kShelfCols = 5;
    constexpr int kColumnAisle = 1;
    constexpr int kRowAisle = 2;
    std::vector<std::uint8_t> blocked(static_cast<std::size_t>(width) * height, 0);
    for (int r0 = kMargin; r0 + kShelfRows <= height - kMargin; r0 += kShelfRows + kRowAisle) {
        for (int c0 = kMargin; c0 + kShelfCols <= width - kMargin; c0 += kShelfCols + kColumnAisle) {
            for (int r = r0; r < r0 + kShelfRows; ++r) {
                for (int c = c0; c < c0 + kShelfCols; ++c) {
                    blocked[static_cast<std::size_t>(r * width + c)] = 1;
                }
            }
        }
    }
    return GridMap(width, height, std::move(blocked));
}

Scenario generate(const GenSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto need = 2 * static_cast<std::size_t>(spec.agent_count);
    Scenario s;
    s.seed = spec.seed;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        GridMap map;
        switch (spec.family) {
        case MapFamily::Random: {
            std::vector<std::uint8_t> blocked(static_cast<std::size_t>(spec.width) * spec.height);
            for (auto& b : blocked) {
                b = uniform01(rng) < spec.obstacle_density ? 1 : 0;
            }
            map = GridMap(spec.width, spec.height, std::move(blocked));
            break;
        }
        case MapFamily::Maze:
            map = generate_maze(spec.width, spec.height, spec.obstacle_density, rng());
            break;
        case MapFamily::Warehouse:
            map = generate_warehouse(spec.width, spec.height);
            break;
        }
        auto cells = largest_component(map);
        if (cells.size() < need) {
            if (spec.family == MapFamily::Warehouse) {
                break;  // the template is fixed; retrying changes nothing
            }
            continue;
        }
        s.agents = place_agents(map, std::move(cells), spec.agent_count, rng);
        s.map = std::move(map);
        return s;
    }
    throw Error(ErrorCode::Infeasible, "cannot place " + std::to_string(spec.agent_count) + " agents on a " +
                                           std::string(to_string(spec.family)) + " " + std::to_string(spec.width) +
                                           "x" + std::to_string(spec.height) + " map");
}

} // namespace steam_mapf
