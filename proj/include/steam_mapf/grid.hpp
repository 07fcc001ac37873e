#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace steam_mapf {

struct Vertex {
    int row = 0;
    int col = 0;

    friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
};

std::string to_string(Vertex v);

/// Move set in canonical order. The order is load-bearing: every argmax and
/// every path tie-break in the library resolves toward the lower enumerator.
enum class Action : std::uint8_t { Wait = 0, Up = 1, Down = 2, Left = 3, Right = 4 };

inline constexpr std::size_t kActionCount = 5;
inline constexpr std::array<Action, kActionCount> kActions = {Action::Wait, Action::Up, Action::Down,
                                                              Action::Left, Action::Right};

std::string_view to_string(Action a);

constexpr Vertex offset(Action a) {
    switch (a) {
    case Action::Up: return {-1, 0};
    case Action::Down: return {1, 0};
    case Action::Left: return {0, -1};
    case Action::Right: return {0, 1};
    case Action::Wait: break;
    }
    return {0, 0};
}

constexpr Vertex step(Vertex v, Action a) {
    const Vertex d = offset(a);
    return {v.row + d.row, v.col + d.col};
}

/// Static occupancy grid. Immutable once built; the induced graph is the
/// 4-connected graph over free cells.
class GridMap {
public:
    GridMap() = default;
    GridMap(int width, int height, std::vector<std::uint8_t> blocked);

    /// All-free map.
    static GridMap empty(int width, int height);
    /// Builds from rows of '.' (free) and '@' (blocked); handy for fixtures.
    static GridMap from_rows(std::span<const std::string> rows);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t cell_count() const { return blocked_.size(); }

    bool in_bounds(Vertex v) const { return v.row >= 0 && v.row < height_ && v.col >= 0 && v.col < width_; }
    bool blocked(Vertex v) const { return blocked_[index(v)] != 0; }
    bool free(Vertex v) const { return in_bounds(v) && blocked_[index(v)] == 0; }
    bool blocked_at(std::size_t idx) const { return blocked_[idx] != 0; }

    std::size_t index(Vertex v) const {
        return static_cast<std::size_t>(v.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(v.col);
    }
    Vertex vertex(std::size_t idx) const {
        return {static_cast<int>(idx / static_cast<std::size_t>(width_)),
                static_cast<int>(idx % static_cast<std::size_t>(width_))};
    }

    std::size_t free_count() const;
    std::span<const std::uint8_t> cells() const { return blocked_; }

    friend bool operator==(const GridMap&, const GridMap&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> blocked_;
};

/// Parses the MovingAI grid format: "type", "height H", "width W", "map",
/// then H rows of W characters. Free: . G S. Blocked: @ O T W.
GridMap parse_map(std::istream& in);
GridMap parse_map(std::string_view text);
GridMap load_map(const std::string& path);
std::string write_map(const GridMap& map);

/// Successor of `v` under `a`. Moves that leave the map or enter an obstacle
/// degrade to Wait.
Vertex next_vertex(const GridMap& map, Vertex v, Action a);

enum class ConflictKind { Vertex, Swap };

struct TransitionConflict {
    std::size_t i = 0;
    std::size_t j = 0;
    ConflictKind kind = ConflictKind::Vertex;

    friend bool operator==(const TransitionConflict&, const TransitionConflict&) = default;
};

/// Every pair i<j violating the vertex or edge-swap constraint on the
/// transition prev -> next, sorted by (i, j).
std::vector<TransitionConflict> find_transition_conflicts(std::span<const Vertex> prev, std::span<const Vertex> next);

/// Connected-component label per cell (blocked cells get -1).
std::vector<int> component_labels(const GridMap& map);

} // namespace steam_mapf

template <>
struct std::hash<steam_mapf::Vertex> {
    std::size_t operator()(const steam_mapf::Vertex& v) const noexcept {
        return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.row)) << 32) |
                                          static_cast<std::uint32_t>(v.col));
    }
};
