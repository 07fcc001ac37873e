#include "steam_mapf/steam.hpp"

#include "steam_mapf/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

namespace steam_mapf {

void SteamConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, "steam." + what); };
    if (probe_penalty < 0.0) fail("probe_penalty must be >= 0 (0 = automatic)");
    if (gamma_time < 0.0 || gamma_dist < 0.0) fail("gamma_time and gamma_dist must be >= 0");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (alpha < 0.0) fail("alpha must be >= 0");
    if (update_interval < 1) fail("update_interval must be >= 1");
    if (horizon_cap < 1) fail("horizon_cap must be >= 1");
    if (detour_floor < 0.0) fail("detour_floor must be >= 0");
}

BaseRouting BaseRouting::uniform(const GridMap& map, std::span<const Vertex> goals) {
    BaseRouting out;
    out.weights.assign(goals.size(), WeightField::uniform(map));
    out.fields.reserve(goals.size());
    for (std::size_t i = 0; i < goals.size(); ++i) {
        out.fields.push_back(compute_cost_field(map, out.weights[i], goals[i]));
    }
    return out;
}

std::vector<Routing> BaseRouting::all() const {
    std::vector<Routing> out;
    out.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        out.push_back(at(i));
    }
    return out;
}

double default_probe_penalty(const GridMap& map, std::span<const WeightField> base) {
    double max_weight = 1.0;
    for (const auto& w : base) {
        max_weight = std::max(max_weight, w.max_finite());
    }
    return static_cast<double>(map.width()) * static_cast<double>(map.height()) * max_weight + 1.0;
}

std::vector<PathPlan> rollout_paths(std::span<const Vertex> positions, std::span<const Routing> routing) {
    if (positions.size() != routing.size()) {
        throw Error(ErrorCode::LengthMismatch, "one routing entry per agent is required");
    }
    std::vector<PathPlan> paths;
    paths.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!routing[i].field->reachable(positions[i])) {
            throw Error(ErrorCode::Unreachable, "agent " + std::to_string(i) + " cannot reach its goal", i);
        }
        paths.push_back(extract_path(*routing[i].field, *routing[i].weights, positions[i]));
    }
    return paths;
}

std::vector<CongestionPoint> detect_congestion(std::span<const PathPlan> paths, int horizon_cap, bool detect_swaps) {
    std::vector<CongestionPoint> out;
    std::size_t longest = 0;
    for (const auto& p : paths) {
        longest = std::max(longest, p.length());
    }
    // Past the longest path everyone rests on a distinct goal.
    const int last = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(horizon_cap), longest));

    // Bucket agents by cell with per-offset stamps instead of sorting.
    int rows = 0;
    int cols = 0;
    for (const auto& p : paths) {
        for (const Vertex& v : p.vertices) {
            rows = std::max(rows, v.row + 1);
            cols = std::max(cols, v.col + 1);
        }
    }
    const auto cell = [cols](Vertex v) {
        return static_cast<std::size_t>(v.row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(v.col);
    };
    std::vector<int> stamp(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0);
    std::vector<std::size_t> head(stamp.size());
    std::vector<std::size_t> chain(paths.size());
    constexpr std::size_t kEnd = static_cast<std::size_t>(-1);
    std::vector<std::pair<Vertex, std::size_t>> at_prev(paths.size());
    for (int h = 1; h <= last; ++h) {
        const auto hh = static_cast<std::size_t>(h);
        const auto first_of_h = out.size();
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const Vertex v = paths[i].at(hh);
            const std::size_t c = cell(v);
            chain[i] = kEnd;
            if (stamp[c] != h) {
                stamp[c] = h;
                head[c] = i;
                continue;
            }
            std::size_t k = head[c];
            for (;;) {
                out.push_back({k, i, v, h});
                if (chain[k] == kEnd) {
                    chain[k] = i;
                    break;
                }
                k = chain[k];
            }
        }
        if (detect_swaps) {
            for (std::size_t i = 0; i < paths.size(); ++i) {
                at_prev[i] = {paths[i].at(hh - 1), i};
            }
            std::sort(at_prev.begin(), at_prev.end());
            for (std::size_t i = 0; i < paths.size(); ++i) {
                const Vertex from = paths[i].at(hh - 1);
                const Vertex to = paths[i].at(hh);
                if (from == to) {
                    continue;
                }
                auto [lo, hi] = std::equal_range(at_prev.begin(), at_prev.end(), std::pair<Vertex, std::size_t>{to, 0},
                                                 [](const auto& x, const auto& y) { return x.first < y.first; });
                for (auto it = lo; it != hi; ++it) {
                    const std::size_t j = it->second;
                    if (j > i && paths[j].at(hh) == from) {
                        out.push_back({i, j, to, h});
                    }
                }
            }
        }
        std::sort(out.begin() + static_cast<std::ptrdiff_t>(first_of_h), out.end(),
                  [](const CongestionPoint& x, const CongestionPoint& y) {
                      return std::tie(x.i, x.j, x.v) < std::tie(y.i, y.j, y.v);
                  });
    }
    return out;
}

ProbeOutcome probe_spatial(const CongestionPoint& point, const GridMap& map, std::span<const Vertex> positions,
                           std::span<const Vertex> goals, std::span<const Routing> base, double penalty) {
    ProbeOutcome out;
    const std::array<std::size_t, 2> involved = {point.i, point.j};
    std::array<bool, 2> bypass{};
    for (std::size_t k = 0; k < 2; ++k) {
        const std::size_t r = involved[k];
        // An agent resting on its goal keeps occupying it: no detour exists.
        if (point.v == goals[r]) {
            out.detours[k] = penalty;
            continue;
        }
        const Routing& route = base[r];
        const double direct = route.field->at(positions[r]);
        const double probed = penalized_cost(map, *route.weights, *route.field, positions[r], point.v, penalty);
        out.detours[k] = probed - direct;
        // A route that still crosses v pays the full penalty; anything
        // measurably below it went around.
        bypass[k] = out.detours[k] < penalty * (1.0 - 1e-9);
    }
    if (!bypass[0] && !bypass[1]) {
        return out;
    }
    out.avoidable = true;
    const std::size_t k = (bypass[0] && (!bypass[1] || out.detours[0] <= out.detours[1])) ? 0 : 1;
    out.agent = involved[k];
    out.detour = out.detours[k];
    return out;
}

double detour_penalty(double detour, const SteamConfig& cfg) {
    const double d = std::max(detour, cfg.detour_floor);
    return d * d;
}

WeightField apply_interventions(const WeightField& base, std::span<const SpatialIntervention> interventions,
                                const SteamConfig& cfg) {
    WeightField out = base;
    for (const auto& s : interventions) {
        out.add(s.v, detour_penalty(s.detour, cfg));
    }
    return out;
}

std::vector<WeightField> aggregate_interventions(std::span<const SpatialIntervention> interventions,
                                                 std::span<const WeightField> base, const SteamConfig& cfg) {
    std::vector<WeightField> out(base.begin(), base.end());
    for (const auto& s : interventions) {
        out.at(s.agent).add(s.v, detour_penalty(s.detour, cfg));
    }
    return out;
}

namespace {

using Mask = std::uint32_t;

/// Exact vertex cover on a component of at most 32 vertices held as bitmasks.
class CoverSearch {
public:
    explicit CoverSearch(std::vector<Mask> adjacency) : adj_(std::move(adjacency)) {
        all_ = adj_.size() == 32 ? ~Mask{0} : ((Mask{1} << adj_.size()) - 1);
    }

    /// Is there a cover of size <= k containing `in` and avoiding `out`?
    bool feasible(int k, Mask in, Mask out) const {
        for (Mask rest = out; rest; rest &= rest - 1) {
            const int u = std::countr_zero(rest);
            if (adj_[static_cast<std::size_t>(u)] & out) {
                return false;
            }
            in |= adj_[static_cast<std::size_t>(u)];
        }
        return search(k, in, out);
    }

private:
    bool search(int k, Mask in, Mask out) const {
        const int used = std::popcount(in);
        if (used > k) {
            return false;
        }
        const Mask open = all_ & ~in & ~out;
        int best = -1;
        int best_degree = 0;
        int edges2 = 0;
        for (Mask rest = open; rest; rest &= rest - 1) {
            const int u = std::countr_zero(rest);
            const int d = std::popcount(adj_[static_cast<std::size_t>(u)] & open);
            edges2 += d;
            if (d == 1) {
                // Taking the lone neighbor is never worse than taking u.
                const Mask neighbor = adj_[static_cast<std::size_t>(u)] & open;
                return search(k, in | neighbor, out | (Mask{1} << u));
            }
            if (d > best_degree) {
                best_degree = d;
                best = u;
            }
        }
        if (best_degree == 0) {
            return true;
        }
        const int budget = k - used;
        const int edges = edges2 / 2;
        if (edges > budget * best_degree) {
            return false;
        }
        const Mask bit = Mask{1} << best;
        if (search(k, in | bit, out)) {
            return true;
        }
        return search(k, in | (adj_[static_cast<std::size_t>(best)] & open), out | bit);
    }

    std::vector<Mask> adj_;
    Mask all_ = 0;
};

std::vector<std::size_t> exact_component_cover(const std::vector<std::size_t>& vertices,
                                               const std::vector<std::vector<std::size_t>>& neighbors,
                                               const std::map<std::size_t, std::size_t>& local) {
    std::vector<Mask> adj(vertices.size(), 0);
    for (std::size_t a = 0; a < vertices.size(); ++a) {
        for (std::size_t n : neighbors[a]) {
            adj[a] |= Mask{1} << local.at(n);
        }
    }
    const CoverSearch search(adj);
    int k = 0;
    while (!search.feasible(k, 0, 0)) {
        ++k;
    }
    // Walk vertices in ascending index order and keep each one whenever a
    // minimum cover still exists with it: this yields the lexicographically
    // smallest minimum cover.
    Mask in = 0;
    Mask out = 0;
    for (std::size_t a = 0; a < vertices.size(); ++a) {
        const Mask bit = Mask{1} << a;
        if (search.feasible(k, in | bit, out)) {
            in |= bit;
        } else {
            out |= bit;
        }
    }
    std::vector<std::size_t> cover;
    for (std::size_t a = 0; a < vertices.size(); ++a) {
        if (in & (Mask{1} << a)) {
            cover.push_back(vertices[a]);
        }
    }
    return cover;
}

std::vector<std::size_t> greedy_component_cover(const std::vector<std::size_t>& vertices,
                                                std::vector<std::vector<std::size_t>> neighbors,
                                                const std::map<std::size_t, std::size_t>& local) {
    std::vector<std::size_t> cover;
    for (;;) {
        std::size_t best = vertices.size();
        std::size_t best_degree = 0;
        for (std::size_t a = 0; a < vertices.size(); ++a) {
            if (neighbors[a].size() > best_degree) {
                best_degree = neighbors[a].size();
                best = a;
            }
        }
        if (best_degree == 0) {
            break;
        }
        cover.push_back(vertices[best]);
        for (std::size_t n : neighbors[best]) {
            auto& back = neighbors[local.at(n)];
            back.erase(std::remove(back.begin(), back.end(), vertices[best]), back.end());
        }
        neighbors[best].clear();
    }
    std::sort(cover.begin(), cover.end());
    return cover;
}

} // namespace

CoverSelection minimum_vertex_cover(std::span<const std::pair<std::size_t, std::size_t>> edges) {
    std::map<std::size_t, std::vector<std::size_t>> adjacency;
    for (auto [a, b] : edges) {
        if (a == b) {
            continue;
        }
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    for (auto& [v, list] : adjacency) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }

    CoverSelection result;
    std::map<std::size_t, bool> seen;
    for (const auto& [root, unused] : adjacency) {
        if (seen[root]) {
            continue;
        }
        std::vector<std::size_t> component{root};
        seen[root] = true;
        for (std::size_t k = 0; k < component.size(); ++k) {
            for (std::size_t n : adjacency[component[k]]) {
                if (!seen[n]) {
                    seen[n] = true;
                    component.push_back(n);
                }
            }
        }
        std::sort(component.begin(), component.end());
        std::map<std::size_t, std::size_t> local;
        std::vector<std::vector<std::size_t>> neighbors;
        for (std::size_t a = 0; a < component.size(); ++a) {
            local[component[a]] = a;
            neighbors.push_back(adjacency[component[a]]);
        }
        std::vector<std::size_t> part;
        if (component.size() <= kExactCoverLimit) {
            part = exact_component_cover(component, neighbors, local);
        } else {
            part = greedy_component_cover(component, std::move(neighbors), local);
            result.approximate = true;
        }
        result.agents.insert(result.agents.end(), part.begin(), part.end());
    }
    std::sort(result.agents.begin(), result.agents.end());
    return result;
}

CoverSelection select_cover(std::span<const CongestionPoint> temporal_points) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(temporal_points.size());
    for (const auto& p : temporal_points) {
        edges.emplace_back(p.i, p.j);
    }
    return minimum_vertex_cover(edges);
}

ConflictTarget earliest_conflict(std::size_t agent, std::span<const CongestionPoint> temporal_points) {
    std::optional<ConflictTarget> best;
    for (const auto& p : temporal_points) {
        if (p.i != agent && p.j != agent) {
            continue;
        }
        if (!best || std::tie(p.h, p.v) < std::tie(best->h, best->v)) {
            best = ConflictTarget{p.v, p.h};
        }
    }
    if (!best) {
        throw Error(ErrorCode::NoConflict, "agent " + std::to_string(agent) + " has no unresolved conflict", agent);
    }
    return *best;
}

double temporal_gain(int h, double distance, const SteamConfig& cfg) {
    return cfg.gamma_time / (static_cast<double>(h) + cfg.epsilon) + cfg.gamma_dist / (distance + cfg.epsilon);
}

LogitVector temporal_correction(const GridMap& map, Vertex position, const TemporalAssignment& assignment,
                                const CostField& to_bottleneck) {
    LogitVector delta = zero_logits();
    const double here = to_bottleneck.at(position);
    for (Action a : kActions) {
        const double progress = here - to_bottleneck.at(next_vertex(map, position, a));
        if (progress > 0.0) {
            delta[static_cast<std::size_t>(a)] = -assignment.lambda * progress;
        }
    }
    return delta;
}

std::vector<std::size_t> window_neighbors(std::size_t agent, std::span<const Vertex> positions,
                                          std::span<const Vertex> goals, int radius) {
    std::vector<std::size_t> out;
    const Vertex p = positions[agent];
    for (std::size_t j = 0; j < positions.size(); ++j) {
        if (j == agent || positions[j] == goals[j]) {
            continue;
        }
        if (std::abs(positions[j].row - p.row) <= radius && std::abs(positions[j].col - p.col) <= radius) {
            out.push_back(j);
        }
    }
    return out;
}

std::array<int, kActionCount> density_scores(const GridMap& map, std::size_t agent, std::span<const Vertex> positions,
                                             std::span<const std::size_t> neighbors,
                                             std::span<const Routing> corrected) {
    std::array<int, kActionCount> scores{};
    const Vertex p = positions[agent];
    for (Action a : kActions) {
        const Vertex u = next_vertex(map, p, a);
        int count = 0;
        for (std::size_t j : neighbors) {
            const CostField& field = *corrected[j].field;
            if (field.at(u) - field.at(positions[j]) < 0.0) {
                ++count;
            }
        }
        scores[static_cast<std::size_t>(a)] = count;
    }
    return scores;
}

double logit_spread(const LogitVector& logits, double blocked_logit, bool exclude_blocked) {
    std::array<double, kActionCount> kept{};
    std::size_t n = 0;
    for (double x : logits) {
        const double clamped = std::max(x, -blocked_logit);
        if (exclude_blocked && clamped <= -blocked_logit) {
            continue;
        }
        kept[n++] = clamped;
    }
    if (n == 0) {
        return 0.0;
    }
    const double mean = std::accumulate(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(n), 0.0) /
                        static_cast<double>(n);
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        var += (kept[k] - mean) * (kept[k] - mean);
    }
    return std::sqrt(var / static_cast<double>(n));
}

LogitVector emergent_correction(const LogitVector& after_time, const std::array<int, kActionCount>& scores,
                                double alpha, double blocked_logit, bool exclude_blocked) {
    LogitVector delta = zero_logits();
    if (alpha == 0.0 || std::all_of(scores.begin(), scores.end(), [](int s) { return s == 0; })) {
        return delta;
    }
    const double sigma = logit_spread(after_time, blocked_logit, exclude_blocked);
    for (std::size_t k = 0; k < kActionCount; ++k) {
        if (scores[k] != 0) {
            delta[k] = -alpha * sigma * static_cast<double>(scores[k]);
        }
    }
    return delta;
}

SteamEngine::SteamEngine(const GridMap& map, std::vector<Vertex> goals, const BaseRouting& base, SteamConfig cfg,
                         double blocked_logit, int observation_radius)
    : map_(map), goals_(std::move(goals)), base_(base), cfg_(cfg), blocked_logit_(blocked_logit),
      observation_radius_(observation_radius), overrides_(goals_.size()), bottlenecks_(goals_.size()) {
    cfg_.validate();
    penalty_ = cfg_.probe_penalty > 0.0 ? cfg_.probe_penalty : default_probe_penalty(map_, base_.weights);
    corrected_ = base_.all();
}

Routing SteamEngine::effective(std::size_t agent) const {
    if (const auto& o = overrides_[agent]) {
        return {&o->weights, &o->field};
    }
    return base_.at(agent);
}

void SteamEngine::step(int step, std::span<const Vertex> positions) {
    if (is_update_step(step)) {
        heavy_update(step, positions);
    }
}

void SteamEngine::heavy_update(int step, std::span<const Vertex> positions) {
    const std::size_t n = goals_.size();
    std::vector<Routing> rollout_routing(n);
    for (std::size_t i = 0; i < n; ++i) {
        rollout_routing[i] = cfg_.rollout_weights == RolloutWeights::Base ? base_.at(i) : effective(i);
    }
    const auto paths = rollout_paths(positions, rollout_routing);

    RoundSummary round;
    round.step = step;
    round.points = detect_congestion(paths, cfg_.horizon_cap, cfg_.detect_swaps);

    const auto base_routing = base_.all();
    for (const auto& point : round.points) {
        if (!cfg_.probing) {
            round.temporal_points.push_back(point);
            continue;
        }
        const auto probe = probe_spatial(point, map_, positions, goals_, base_routing, penalty_);
        if (probe.avoidable) {
            round.interventions.push_back({probe.agent, point.v, probe.detour});
        } else {
            round.temporal_points.push_back(point);
        }
    }

    // Effective weights are rebuilt from the base each round. A field is only
    // recomputed when the agent's penalty table actually changed.
    std::vector<std::vector<SpatialIntervention>> per_agent(n);
    for (const auto& s : round.interventions) {
        per_agent[s.agent].push_back(s);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (per_agent[i].empty()) {
            overrides_[i].reset();
            continue;
        }
        auto weights = apply_interventions(base_.weights[i], per_agent[i], cfg_);
        if (overrides_[i] && overrides_[i]->weights == weights) {
            overrides_[i]->interventions = std::move(per_agent[i]);
            continue;
        }
        auto field = compute_cost_field(map_, weights, goals_[i]);
        overrides_[i] = AgentOverride{std::move(per_agent[i]), std::move(weights), std::move(field)};
    }

    const auto cover = select_cover(round.temporal_points);
    round.cover_approximate = cover.approximate;
    std::vector<std::optional<Bottleneck>> next(n);
    for (std::size_t agent : cover.agents) {
        const auto target = earliest_conflict(agent, round.temporal_points);
        Bottleneck b;
        if (bottlenecks_[agent] && bottlenecks_[agent]->assignment.v == target.v) {
            b.field = std::move(bottlenecks_[agent]->field);
        } else {
            b.field = compute_cost_field(map_, base_.weights[agent], target.v);
        }
        const double distance = b.field.at(positions[agent]);
        b.assignment = {agent, target.v, target.h, temporal_gain(target.h, distance, cfg_)};
        round.assignments.push_back(b.assignment);
        next[agent] = std::move(b);
    }
    bottlenecks_ = std::move(next);
    for (std::size_t i = 0; i < n; ++i) {
        corrected_[i] = effective(i);
    }

    ++stats_.rounds;
    stats_.congestion_points += round.points.size();
    stats_.spatial_interventions += round.interventions.size();
    stats_.temporal_assignments += round.assignments.size();
    stats_.approximate_covers += round.cover_approximate ? 1 : 0;
    round_ = std::move(round);
}

LogitVector SteamEngine::temporal_delta(std::size_t agent, Vertex position) const {
    const auto& b = bottlenecks_[agent];
    if (!b) {
        return zero_logits();
    }
    return temporal_correction(map_, position, b->assignment, b->field);
}

LogitVector SteamEngine::emergent_delta(int step, std::size_t agent, const LogitVector& after_time,
                                        std::span<const Vertex> positions) {
    if (cfg_.alpha == 0.0 || (!cfg_.emergent_every_step && !is_update_step(step))) {
        return zero_logits();
    }
    neighbors_.clear();
    const Vertex p = positions[agent];
    for (std::size_t j = 0; j < positions.size(); ++j) {
        if (j != agent && positions[j] != goals_[j] && std::abs(positions[j].row - p.row) <= observation_radius_ &&
            std::abs(positions[j].col - p.col) <= observation_radius_) {
            neighbors_.push_back(j);
        }
    }
    if (neighbors_.empty()) {
        return zero_logits();
    }
    const auto scores = density_scores(map_, agent, positions, neighbors_, corrected_);
    const auto delta = emergent_correction(after_time, scores, cfg_.alpha, blocked_logit_, cfg_.sigma_excludes_blocked);
    if (std::any_of(delta.begin(), delta.end(), [](double d) { return d != 0.0; })) {
        ++stats_.emergent_corrections;
    }
    return delta;
}

} // namespace steam_mapf
