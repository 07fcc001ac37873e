#pragma once

#include "steam_mapf/grid.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace steam_mapf {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Per-vertex traversal weight aligned with a GridMap: +inf exactly on
/// obstacles, strictly positive elsewhere.
class WeightField {
public:
    WeightField() = default;
    /// Validates `values` against the map's obstacle mask.
    WeightField(const GridMap& map, std::vector<double> values);

    /// 1 on every free cell.
    static WeightField uniform(const GridMap& map);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t idx) const { return values_[idx]; }
    double at(Vertex v) const { return values_[index(v)]; }
    std::span<const double> values() const { return values_; }

    /// Adds `delta` (> 0) to a free cell.
    void add(Vertex v, double delta);

    double max_finite() const;
    /// XOR of per-cell hashes of (index, weight); identifies which field a
    /// CostField was built from and is kept current by add() in O(1).
    std::uint64_t fingerprint() const { return fingerprint_; }

    friend bool operator==(const WeightField& a, const WeightField& b) {
        return a.width_ == b.width_ && a.values_ == b.values_;
    }

private:
    std::size_t index(Vertex v) const {
        return static_cast<std::size_t>(v.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(v.col);
    }
    static std::uint64_t cell_hash(std::size_t idx, double value);
    void refresh_fingerprint();

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
    std::uint64_t fingerprint_ = 0;
};

/// Weighted cost-to-go toward one target. The cost of a path is the sum of
/// the weights of every vertex it enters, so the query vertex itself is never
/// charged and cost(target) == 0.
struct CostField {
    Vertex target;
    std::uint64_t weights_id = 0;
    int width = 0;
    int height = 0;
    std::vector<double> cost;

    double at(Vertex v) const {
        return cost[static_cast<std::size_t>(v.row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(v.col)];
    }
    bool reachable(Vertex v) const { return at(v) < kInfinity; }
};

/// Exact Dijkstra from `target` over the reversed entered-vertex costs.
/// Throws TargetBlocked when the target is not a free cell.
CostField compute_cost_field(const GridMap& map, const WeightField& w, Vertex target);

/// Shortest path rollout. P(h) clamps to the last vertex, i.e. an agent
/// that has arrived stays where it is.
struct PathPlan {
    std::vector<Vertex> vertices;

    Vertex at(std::size_t h) const { return h < vertices.size() ? vertices[h] : vertices.back(); }
    std::size_t length() const { return vertices.size() - 1; }
};

/// Greedy descent on `field` from `start`: step to the neighbor minimizing
/// weight + cost, ties in canonical action order. Throws Unreachable.
PathPlan extract_path(const CostField& field, const WeightField& w, Vertex start);

/// Sum of entered-vertex weights along a plan, accumulated from the tail.
double path_cost(const PathPlan& plan, const WeightField& w);

/// Row-major window x window grid centered on some vertex. (dr, dc) offsets
/// range over [-radius, radius].
template <typename T>
struct WindowGrid {
    int window = 0;
    std::vector<T> cells;

    WindowGrid() = default;
    WindowGrid(int side, T fill) : window(side), cells(static_cast<std::size_t>(side) * side, fill) {}

    int radius() const { return window / 2; }
    bool contains(int dr, int dc) const {
        return dr >= -radius() && dr <= radius() && dc >= -radius() && dc <= radius();
    }
    T& at(int dr, int dc) { return cells[slot(dr, dc)]; }
    const T& at(int dr, int dc) const { return cells[slot(dr, dc)]; }

    friend bool operator==(const WindowGrid&, const WindowGrid&) = default;

private:
    std::size_t slot(int dr, int dc) const {
        return static_cast<std::size_t>(dr + radius()) * static_cast<std::size_t>(window) +
               static_cast<std::size_t>(dc + radius());
    }
};

/// Relative cost channel cost(v) - cost(center) over the window. Cells that
/// are off-map, blocked or unreachable carry +inf. `window` must be odd.
/// Throws CenterUnreachable.
WindowGrid<double> local_channel(const CostField& field, Vertex center, int window);

/// Same window, but each cell also counts its own weight: the value at v is the
/// cost of the best route from the center that enters v first. A penalty on a
/// neighbouring cell is then visible one step ahead. Equal to the plain channel
/// when weights are uniform.
WindowGrid<double> local_channel(const CostField& field, const WeightField& w, Vertex center, int window);

/// Exact cost from `start` to `goal` under `w` with `penalty` added to the
/// weight of `penalized`. `goal_field` must be the cost field to `goal` under
/// the unpenalized `w`; it serves as a consistent A* heuristic, so only the
/// region that can beat the penalized route is expanded.
double penalized_cost(const GridMap& map, const WeightField& w, const CostField& goal_field, Vertex start,
                      Vertex penalized, double penalty);

} // namespace steam_mapf
