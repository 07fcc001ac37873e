#include "steam_mapf/cost_field.hpp"

#include "steam_mapf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <queue>
#include <tuple>

namespace steam_mapf {

namespace {

constexpr std::array<Action, 4> kMoves = {Action::Up, Action::Down, Action::Left, Action::Right};

using QueueEntry = std::pair<double, std::uint32_t>;
using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

} // namespace

WeightField::WeightField(const GridMap& map, std::vector<double> values)
    : width_(map.width()), height_(map.height()), values_(std::move(values)) {
    if (values_.size() != map.cell_count()) {
        throw Error(ErrorCode::DimensionMismatch, "weight field size does not match the map");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const bool blocked = map.blocked_at(i);
        if (blocked ? values_[i] != kInfinity : !(values_[i] > 0.0 && values_[i] < kInfinity)) {
            throw Error(ErrorCode::InvalidConfig,
                        "weight at " + to_string(map.vertex(i)) + " must be " + (blocked ? "+inf" : "finite and > 0"));
        }
    }
    refresh_fingerprint();
}

WeightField WeightField::uniform(const GridMap& map) {
    std::vector<double> values(map.cell_count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = map.blocked_at(i) ? kInfinity : 1.0;
    }
    return WeightField(map, std::move(values));
}

void WeightField::add(Vertex v, double delta) {
    double& slot = values_[index(v)];
    if (slot == kInfinity) {
        throw Error(ErrorCode::InvalidConfig, "cannot reweight obstacle " + to_string(v));
    }
    fingerprint_ ^= cell_hash(index(v), slot);
    slot += delta;
    fingerprint_ ^= cell_hash(index(v), slot);
}

double WeightField::max_finite() const {
    double best = 0.0;
    for (double x : values_) {
        if (x < kInfinity) {
            best = std::max(best, x);
        }
    }
    return best;
}

std::uint64_t WeightField::cell_hash(std::size_t idx, double value) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &value, sizeof bits);
    // splitmix64 finalizer over the cell index and the weight bits
    std::uint64_t z = bits + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(idx) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void WeightField::refresh_fingerprint() {
    std::uint64_t h = static_cast<std::uint64_t>(width_) << 32 | static_cast<std::uint32_t>(height_);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        h ^= cell_hash(i, values_[i]);
    }
    fingerprint_ = h;
}

CostField compute_cost_field(const GridMap& map, const WeightField& w, Vertex target) {
    if (!map.free(target)) {
        throw Error(ErrorCode::TargetBlocked, "cost field target " + to_string(target) + " is not a free cell");
    }
    CostField field{target, w.fingerprint(), map.width(), map.height(), std::vector<double>(map.cell_count(), kInfinity)};
    auto& cost = field.cost;
    const auto width = static_cast<std::uint32_t>(map.width());
    const auto height = static_cast<std::uint32_t>(map.height());
    const auto t = static_cast<std::uint32_t>(map.index(target));
    cost[t] = 0.0;

    auto for_each_free_neighbor = [&](std::uint32_t u, auto&& visit) {
        const std::uint32_t row = u / width;
        const std::uint32_t col = u % width;
        if (row > 0 && !map.blocked_at(u - width)) visit(u - width);
        if (row + 1 < height && !map.blocked_at(u + width)) visit(u + width);
        if (col > 0 && !map.blocked_at(u - 1)) visit(u - 1);
        if (col + 1 < width && !map.blocked_at(u + 1)) visit(u + 1);
    };

    const auto values = w.values();
    if (std::all_of(values.begin(), values.end(), [](double x) { return x == 1.0 || x == kInfinity; })) {
        // Unit weights: breadth-first order is already cost order.
        std::vector<std::uint32_t> frontier{t};
        frontier.reserve(map.cell_count());
        for (std::size_t k = 0; k < frontier.size(); ++k) {
            const std::uint32_t u = frontier[k];
            const double through = cost[u] + 1.0;
            for_each_free_neighbor(u, [&](std::uint32_t n) {
                if (cost[n] == kInfinity) {
                    cost[n] = through;
                    frontier.push_back(n);
                }
            });
        }
        return field;
    }

    double max_weight = 0.0;
    bool integral = true;
    for (double x : values) {
        if (x < kInfinity) {
            integral = integral && x == std::floor(x);
            max_weight = std::max(max_weight, x);
        }
    }
    if (integral && max_weight <= 65536.0) {
        // Small integer weights: a circular bucket queue (Dial) settles
        // vertices in cost order without a heap. Integer sums are exact.
        const auto span = static_cast<std::size_t>(max_weight) + 1;
        std::vector<std::vector<std::uint32_t>> buckets(span);
        buckets[0].push_back(t);
        std::size_t pending = 1;
        for (std::size_t d = 0; pending > 0; ++d) {
            auto& bucket = buckets[d % span];
            for (std::size_t k = 0; k < bucket.size(); ++k) {
                const std::uint32_t u = bucket[k];
                --pending;
                if (cost[u] != static_cast<double>(d)) {
                    continue;
                }
                const double through = cost[u] + w[u];
                for_each_free_neighbor(u, [&](std::uint32_t n) {
                    if (through < cost[n]) {
                        cost[n] = through;
                        buckets[static_cast<std::size_t>(through) % span].push_back(n);
                        ++pending;
                    }
                });
            }
            bucket.clear();
        }
        return field;
    }

    std::vector<QueueEntry> storage;
    storage.reserve(map.cell_count());
    MinQueue open(std::greater<>{}, std::move(storage));
    open.emplace(0.0, t);
    while (!open.empty()) {
        const auto [d, u] = open.top();
        open.pop();
        if (d > cost[u]) {
            continue;
        }
        // Stepping from a neighbor into u charges w(u).
        const double through = d + w[u];
        for_each_free_neighbor(u, [&](std::uint32_t n) {
            if (through < cost[n]) {
                cost[n] = through;
                open.emplace(through, n);
            }
        });
    }
    return field;
}

PathPlan extract_path(const CostField& field, const WeightField& w, Vertex start) {
    if (!field.reachable(start)) {
        throw Error(ErrorCode::Unreachable, "no path from " + to_string(start) + " to " + to_string(field.target));
    }
    PathPlan plan;
    plan.vertices.push_back(start);
    Vertex v = start;
    while (v != field.target) {
        Vertex best = v;
        double best_value = kInfinity;
        for (Action a : kMoves) {
            const Vertex n = step(v, a);
            if (n.row < 0 || n.row >= field.height || n.col < 0 || n.col >= field.width) {
                continue;
            }
            const double value = w.at(n) + field.at(n);
            if (value < best_value) {
                best_value = value;
                best = n;
            }
        }
        // Entered-vertex weights are positive, so cost strictly decreases.
        if (best == v || !(field.at(best) < field.at(v))) {
            throw Error(ErrorCode::Unreachable, "cost field is inconsistent at " + to_string(v));
        }
        v = best;
        plan.vertices.push_back(v);
    }
    return plan;
}

double path_cost(const PathPlan& plan, const WeightField& w) {
    double total = 0.0;
    for (std::size_t k = plan.vertices.size(); k-- > 1;) {
        total += w.at(plan.vertices[k]);
    }
    return total;
}

namespace {

WindowGrid<double> channel_impl(const CostField& field, const WeightField* w, Vertex center, int window) {
    if (window < 1 || window % 2 == 0) {
        throw Error(ErrorCode::InvalidConfig, "observation window must be odd and positive");
    }
    if (!field.reachable(center)) {
        throw Error(ErrorCode::CenterUnreachable, "center " + to_string(center) + " cannot reach " +
                                                      to_string(field.target));
    }
    WindowGrid<double> out(window, kInfinity);
    const auto own = [w](Vertex v) { return w ? w->at(v) : 0.0; };
    const double base = field.at(center) + own(center);
    const int r = out.radius();
    for (int dr = -r; dr <= r; ++dr) {
        const int row = center.row + dr;
        if (row < 0 || row >= field.height) {
            continue;
        }
        for (int dc = -r; dc <= r; ++dc) {
            const int col = center.col + dc;
            if (col < 0 || col >= field.width) {
                continue;
            }
            const double c = field.at({row, col});
            if (c < kInfinity) {
                out.at(dr, dc) = c + own({row, col}) - base;
            }
        }
    }
    out.at(0, 0) = 0.0;
    return out;
}

} // namespace

WindowGrid<double> local_channel(const CostField& field, Vertex center, int window) {
    return channel_impl(field, nullptr, center, window);
}

WindowGrid<double> local_channel(const CostField& field, const WeightField& w, Vertex center, int window) {
    return channel_impl(field, &w, center, window);
}

double penalized_cost(const GridMap& map, const WeightField& w, const CostField& goal_field, Vertex start,
                      Vertex penalized, double penalty) {
    const Vertex goal = goal_field.target;
    if (!goal_field.reachable(start)) {
        return kInfinity;
    }
    if (start == goal) {
        return 0.0;
    }
    const auto penalized_idx = map.index(penalized);
    std::vector<double> g(map.cell_count(), kInfinity);
    // Ties on f go to the deeper node, which keeps the search on one of the
    // many equal-cost routes instead of sweeping the whole plateau.
    using Entry = std::tuple<double, double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const auto s = static_cast<std::uint32_t>(map.index(start));
    g[s] = 0.0;
    open.emplace(goal_field.cost[s], -0.0, s);
    const auto goal_idx = map.index(goal);
    while (!open.empty()) {
        const auto [f, neg_g, u] = open.top();
        open.pop();
        const double gu = g[u];
        if (f > gu + goal_field.cost[u]) {
            continue;
        }
        if (u == goal_idx) {
            return gu;
        }
        const Vertex uv = map.vertex(u);
        for (Action a : kMoves) {
            const Vertex n = step(uv, a);
            if (!map.free(n)) {
                continue;
            }
            const auto ni = static_cast<std::uint32_t>(map.index(n));
            const double h = goal_field.cost[ni];
            if (h == kInfinity) {
                continue;
            }
            const double gn = gu + w[ni] + (ni == penalized_idx ? penalty : 0.0);
            if (gn < g[ni]) {
                g[ni] = gn;
                open.emplace(gn + h, -gn, ni);
            }
        }
    }
    return kInfinity;
}

} // namespace steam_mapf
