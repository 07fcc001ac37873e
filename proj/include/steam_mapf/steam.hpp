#pragma once

#include "steam_mapf/cost_field.hpp"
#include "steam_mapf/grid.hpp"
#include "steam_mapf/policy.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace steam_mapf {

/// Agents i < j predicted to stand on `v` after `h` steps of their rollouts.
struct CongestionPoint {
    std::size_t i = 0;
    std::size_t j = 0;
    Vertex v;
    int h = 1;

    friend bool operator==(const CongestionPoint&, const CongestionPoint&) = default;
};

/// Agent `agent` should route around `v`; `detour` is what that costs it.
struct SpatialIntervention {
    std::size_t agent = 0;
    Vertex v;
    double detour = 0.0;

    friend bool operator==(const SpatialIntervention&, const SpatialIntervention&) = default;
};

/// Agent `agent` is held back from bottleneck `v`, predicted `h` steps out.
struct TemporalAssignment {
    std::size_t agent = 0;
    Vertex v;
    int h = 1;
    double lambda = 0.0;
};

enum class RolloutWeights { Base, Effective };

struct SteamConfig {
    /// Probe penalty Lambda. 0 selects width * height * max finite weight + 1,
    /// which exceeds the cost of any simple detour.
    double probe_penalty = 0.0;
    double gamma_time = 4.0;
    double gamma_dist = 4.0;
    double epsilon = 1e-6;
    double alpha = 0.3;
    int update_interval = 5;
    int horizon_cap = 128;
    RolloutWeights rollout_weights = RolloutWeights::Base;
    /// Off: every congestion point goes straight to the temporal residue.
    bool probing = true;
    /// Also treat predicted edge swaps as congestion points.
    bool detect_swaps = false;
    /// Off: the emergent term is only refreshed on update steps.
    bool emergent_every_step = true;
    /// Leave logits at or below -M out of the spread used to scale the
    /// emergent term.
    bool sigma_excludes_blocked = true;
    /// The vertex penalty is phi(max(D, detour_floor)) with phi(x) = x^2, so
    /// a zero-cost detour still breaks the tie in favor of the detour.
    double detour_floor = 1.0;

    void validate() const;

    friend bool operator==(const SteamConfig&, const SteamConfig&) = default;
};

/// Weights and the matching cost-to-go field toward one agent's goal.
struct Routing {
    const WeightField* weights = nullptr;
    const CostField* field = nullptr;
};

/// Static per-agent routing used by both the bare and the wrapped policy.
struct BaseRouting {
    std::vector<WeightField> weights;
    std::vector<CostField> fields;

    static BaseRouting uniform(const GridMap& map, std::span<const Vertex> goals);
    Routing at(std::size_t agent) const { return {&weights[agent], &fields[agent]}; }
    std::vector<Routing> all() const;
};

double default_probe_penalty(const GridMap& map, std::span<const WeightField> base);

/// One shortest path per agent from its current position; agents on their
/// goal yield the singleton path. Throws Unreachable naming the agent.
std::vector<PathPlan> rollout_paths(std::span<const Vertex> positions, std::span<const Routing> routing);

/// Every same-vertex coincidence (i < j, 1 <= h <= horizon_cap), sorted by
/// (h, i, j). With `detect_swaps`, a predicted exchange of cells between
/// offsets h-1 and h is reported at the cell agent i enters.
std::vector<CongestionPoint> detect_congestion(std::span<const PathPlan> paths, int horizon_cap,
                                               bool detect_swaps = false);

struct ProbeOutcome {
    bool avoidable = false;
    std::size_t agent = 0;       // selected agent when avoidable
    double detour = 0.0;         // its detour cost
    std::array<double, 2> detours{};  // D_i, D_j
};

/// Penalizes `point.v` by `penalty` for each involved agent and measures the
/// detour. An agent can bypass iff v is not its goal and D < penalty; the
/// bypassing agent with the smaller D is selected, ties to i.
ProbeOutcome probe_spatial(const CongestionPoint& point, const GridMap& map, std::span<const Vertex> positions,
                           std::span<const Vertex> goals, std::span<const Routing> base, double penalty);

/// phi(max(D, floor)) with phi(x) = x^2.
double detour_penalty(double detour, const SteamConfig& cfg);

/// base + sum of penalties at each intervened vertex, for one agent.
WeightField apply_interventions(const WeightField& base, std::span<const SpatialIntervention> interventions,
                                const SteamConfig& cfg);

/// Effective weights per agent, rebuilt from the base weights. Agents without
/// interventions get their base weights back unchanged.
std::vector<WeightField> aggregate_interventions(std::span<const SpatialIntervention> interventions,
                                                 std::span<const WeightField> base, const SteamConfig& cfg);

struct CoverSelection {
    std::vector<std::size_t> agents;  // sorted
    bool approximate = false;
};

/// Largest connected component solved exactly; bigger components fall back
/// to the greedy max-degree heuristic.
inline constexpr std::size_t kExactCoverLimit = 24;

/// Minimum vertex cover of the conflict graph spanned by `edges`; among
/// minimum covers, the lexicographically smallest sorted index set.
CoverSelection minimum_vertex_cover(std::span<const std::pair<std::size_t, std::size_t>> edges);

/// Cover of the unresolved pairs {i, j} of `temporal_points`.
CoverSelection select_cover(std::span<const CongestionPoint> temporal_points);

struct ConflictTarget {
    Vertex v;
    int h = 0;

    friend bool operator==(const ConflictTarget&, const ConflictTarget&) = default;
};

/// Minimal-h point involving `agent`, ties by (row, col). Throws NoConflict.
ConflictTarget earliest_conflict(std::size_t agent, std::span<const CongestionPoint> temporal_points);

/// gamma_time / (h + eps) + gamma_dist / (distance + eps).
double temporal_gain(int h, double distance, const SteamConfig& cfg);

/// -lambda * max(progress(a), 0) where progress(a) is the drop in cost toward
/// `assignment.v` (per `to_bottleneck`) when taking `a` from `position`.
LogitVector temporal_correction(const GridMap& map, Vertex position, const TemporalAssignment& assignment,
                                const CostField& to_bottleneck);

/// Agents other than `agent` within Chebyshev distance `radius` of it that
/// are not resting on their goal.
std::vector<std::size_t> window_neighbors(std::size_t agent, std::span<const Vertex> positions,
                                          std::span<const Vertex> goals, int radius);

/// For each action, how many neighbors would find the successor cell closer
/// to their goal than their own position under their corrected fields.
std::array<int, kActionCount> density_scores(const GridMap& map, std::size_t agent, std::span<const Vertex> positions,
                                             std::span<const std::size_t> neighbors,
                                             std::span<const Routing> corrected);

/// Population standard deviation of the logits. Entries are clamped to -M
/// first; with `exclude_blocked`, entries at -M are left out.
double logit_spread(const LogitVector& logits, double blocked_logit, bool exclude_blocked);

/// -alpha * sigma * score(a).
LogitVector emergent_correction(const LogitVector& after_time, const std::array<int, kActionCount>& scores,
                                double alpha, double blocked_logit, bool exclude_blocked);

/// Outcome of one heavy update round.
struct RoundSummary {
    int step = -1;
    std::vector<CongestionPoint> points;
    std::vector<SpatialIntervention> interventions;
    std::vector<CongestionPoint> temporal_points;
    std::vector<TemporalAssignment> assignments;
    bool cover_approximate = false;
};

struct SteamStats {
    std::size_t rounds = 0;
    std::size_t congestion_points = 0;
    std::size_t spatial_interventions = 0;
    std::size_t temporal_assignments = 0;
    std::size_t emergent_corrections = 0;  // agent-steps with a nonzero emergent delta
    std::size_t approximate_covers = 0;

    bool noop() const {
        return spatial_interventions == 0 && temporal_assignments == 0 && emergent_corrections == 0;
    }
};

/// Per-episode state of the enhancement: effective weights and fields from
/// the last heavy round, the temporal assignments and their bottleneck
/// fields, and running counters.
class SteamEngine {
public:
    SteamEngine(const GridMap& map, std::vector<Vertex> goals, const BaseRouting& base, SteamConfig cfg,
                double blocked_logit, int observation_radius);

    /// Runs the heavy phase (rollout, detection, probing, aggregation, cover,
    /// temporal assignment) when `step` is an update step.
    void step(int step, std::span<const Vertex> positions);

    bool is_update_step(int step) const { return step % cfg_.update_interval == 0; }

    /// Field the agent's observation channel is cut from.
    const CostField& channel_field(std::size_t agent) const { return *effective(agent).field; }
    const WeightField& effective_weights(std::size_t agent) const { return *effective(agent).weights; }

    /// Zero unless the agent was selected for temporal correction.
    LogitVector temporal_delta(std::size_t agent, Vertex position) const;

    /// Density correction against the live positions; counts nonzero results.
    LogitVector emergent_delta(int step, std::size_t agent, const LogitVector& after_time,
                               std::span<const Vertex> positions);

    const RoundSummary& last_round() const { return round_; }
    const SteamStats& stats() const { return stats_; }
    double probe_penalty() const { return penalty_; }
    const SteamConfig& config() const { return cfg_; }

private:
    struct AgentOverride {
        std::vector<SpatialIntervention> interventions;
        WeightField weights;
        CostField field;
    };
    struct Bottleneck {
        TemporalAssignment assignment;
        CostField field;
    };

    Routing effective(std::size_t agent) const;
    void heavy_update(int step, std::span<const Vertex> positions);

    const GridMap& map_;
    std::vector<Vertex> goals_;
    const BaseRouting& base_;
    SteamConfig cfg_;
    double blocked_logit_;
    int observation_radius_;
    double penalty_;

    std::vector<std::optional<AgentOverride>> overrides_;
    std::vector<std::optional<Bottleneck>> bottlenecks_;
    std::vector<Routing> corrected_;        // effective(i) for every agent
    std::vector<std::size_t> neighbors_;    // scratch for emergent_delta
    RoundSummary round_;
    SteamStats stats_;
};

} // namespace steam_mapf
