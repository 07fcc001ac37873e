#pragma once

#include "steam_mapf/config.hpp"
#include "steam_mapf/scenario.hpp"
#include "steam_mapf/steam.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace steam_mapf {

/// Arbitrates one lockstep transition. Repeats until nothing changes:
/// agents in a swap revert; among movers into the same cell the lowest index
/// keeps its move; a mover whose target is another agent's final cell
/// reverts. Rotations through vacated cells are allowed.
std::vector<Vertex> resolve_moves(std::span<const Vertex> prev, std::span<const Vertex> proposed);

enum class EpisodeStatus { Success, Failure, InfrastructureFailure };

std::string_view to_string(EpisodeStatus s);

/// Logits and corrections of one step, kept when tracing is on.
struct StepTrace {
    int step = 0;
    std::vector<LogitVector> logits;  // from the policy, before corrections
    std::vector<LogitVector> temporal;
    std::vector<LogitVector> emergent;
    std::vector<Action> actions;
};

struct EpisodeReport {
    EpisodeStatus status = EpisodeStatus::Failure;
    int steps = 0;  // executed length T
    int makespan = 0;
    long long sum_of_costs = 0;
    /// Earliest t after which the agent stays on its goal, T if it never settles.
    std::vector<int> agent_costs;
    double density = 0.0;  // 0 for single-agent episodes
    /// Positions at t = 0..T per agent.
    std::vector<std::vector<Vertex>> trajectories;
    /// Wall clock per step: full decision (STEAM + policy), and STEAM alone.
    std::vector<double> step_seconds;
    std::vector<double> steam_seconds;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    bool steam_enabled = false;
    SteamStats steam;
    std::string error;  // infrastructure failures only
    std::vector<StepTrace> trace;

    bool success() const { return status == EpisodeStatus::Success; }
    bool steam_noop() const { return steam_enabled && steam.noop(); }
    double mean_step_seconds() const;
    double mean_steam_seconds() const;
};

/// Simulates until every agent stands on its goal or max_steps elapse.
/// External policy failures end the episode as InfrastructureFailure; other
/// errors propagate.
EpisodeReport run_episode(const Scenario& scenario, const EpisodeOptions& options, std::uint64_t seed);

/// Mean fraction of the other agents within `radius` of each agent, over
/// t = 1..T (t = 0 alone when T = 0). Throws SingleAgent for N < 2.
double compute_density(const std::vector<std::vector<Vertex>>& trajectories, int radius,
                       DistanceNorm norm = DistanceNorm::Chebyshev);

/// Average of the per-episode densities.
double compute_density(std::span<const std::vector<std::vector<Vertex>>> episodes, int radius,
                       DistanceNorm norm = DistanceNorm::Chebyshev);

/// Mean with a 95% normal-approximation half width, 1.96 * s / sqrt(n).
struct Interval {
    double mean = 0.0;
    double ci95 = 0.0;
};

Interval mean_interval(std::span<const double> xs);

struct ArmSummary {
    std::uint64_t config_hash = 0;
    std::size_t episodes = 0;
    std::size_t successes = 0;
    std::size_t infrastructure_failures = 0;
    std::size_t steam_noop_episodes = 0;
    // Over episodes without an infrastructure failure.
    Interval success_rate;
    Interval makespan;
    Interval sum_of_costs;
    Interval density;
    Interval step_ms;
    Interval steam_ms;
};

/// Throws EmptyInput and MixedConfig.
ArmSummary aggregate_reports(std::span<const EpisodeReport> reports);

/// Per-seed differences, STEAM-on minus STEAM-off, over pairs where neither
/// episode hit an infrastructure failure.
struct PairedDelta {
    std::size_t pairs = 0;
    long long success_delta = 0;
    Interval success_rate;
    Interval makespan;
    Interval sum_of_costs;
    Interval density;
    Interval step_ms;
};

PairedDelta paired_delta(std::span<const EpisodeReport> on, std::span<const EpisodeReport> off);

} // namespace steam_mapf
