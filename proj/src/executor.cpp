#include "steam_mapf/executor.hpp"

#include "steam_mapf/error.hpp"
#include "steam_mapf/external_policy.hpp"
#include "steam_mapf/observation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <unordered_map>

namespace steam_mapf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

LogitVector plus(const LogitVector& a, const LogitVector& b) {
    LogitVector out{};
    for (std::size_t k = 0; k < kActionCount; ++k) {
        out[k] = a[k] + b[k];
    }
    return out;
}

int distance(Vertex a, Vertex b, DistanceNorm norm) {
    const int dr = std::abs(a.row - b.row);
    const int dc = std::abs(a.col - b.col);
    return norm == DistanceNorm::Chebyshev ? std::max(dr, dc) : dr + dc;
}

double mean(std::span<const double> xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

} // namespace

std::vector<Vertex> resolve_moves(std::span<const Vertex> prev, std::span<const Vertex> proposed) {
    if (prev.size() != proposed.size()) {
        throw Error(ErrorCode::LengthMismatch, "resolve_moves: position lists differ in length");
    }
    const std::size_t n = prev.size();
    std::vector<Vertex> next(proposed.begin(), proposed.end());
    std::unordered_map<Vertex, std::size_t> origin;
    for (std::size_t i = 0; i < n; ++i) {
        origin.emplace(prev[i], i);
    }
    for (bool changed = true; changed;) {
        changed = false;
        // Swaps.
        for (std::size_t i = 0; i < n; ++i) {
            if (next[i] == prev[i]) {
                continue;
            }
            auto it = origin.find(next[i]);
            if (it != origin.end() && it->second != i && next[it->second] == prev[i]) {
                next[i] = prev[i];
                next[it->second] = prev[it->second];
                changed = true;
            }
        }
        // Contested cells: stationary holders win outright, otherwise the
        // lowest-index mover.
        std::unordered_map<Vertex, std::size_t> claim;
        for (std::size_t i = 0; i < n; ++i) {
            if (next[i] == prev[i]) {
                claim[next[i]] = i;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (next[i] == prev[i]) {
                continue;
            }
            if (auto [it, fresh] = claim.emplace(next[i], i); !fresh) {
                next[i] = prev[i];
                changed = true;
            }
        }
        // A reverted mover may now sit where an earlier winner moved in.
        std::unordered_map<Vertex, std::size_t> holder;
        for (std::size_t i = 0; i < n; ++i) {
            if (next[i] == prev[i]) {
                holder[next[i]] = i;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (next[i] != prev[i] && holder.count(next[i])) {
                next[i] = prev[i];
                changed = true;
            }
        }
    }
    return next;
}

std::string_view to_string(EpisodeStatus s) {
    switch (s) {
    case EpisodeStatus::Success: return "success";
    case EpisodeStatus::Failure: return "failure";
    case EpisodeStatus::InfrastructureFailure: return "infrastructure_failure";
    }
    return "?";
}

double EpisodeReport::mean_step_seconds() const { return mean(step_seconds); }
double EpisodeReport::mean_steam_seconds() const { return mean(steam_seconds); }

EpisodeReport run_episode(const Scenario& scenario, const EpisodeOptions& options, std::uint64_t seed) {
    validate_scenario(scenario);
    options.validate();

    const std::size_t n = scenario.agent_count();
    const int window = 2 * options.observation_radius + 1;
    const auto goals = scenario.goals();
    std::vector<Vertex> positions = scenario.starts();

    EpisodeReport report;
    report.seed = seed;
    report.config_hash = config_hash(options, scenario.max_steps);
    report.steam_enabled = options.steam.has_value();
    report.trajectories.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.trajectories[i].push_back(positions[i]);
    }

    // Static routing is shared by both arms and built before the clock starts.
    const BaseRouting base = BaseRouting::uniform(scenario.map, goals);
    std::unique_ptr<SteamEngine> engine;
    if (options.steam) {
        engine = std::make_unique<SteamEngine>(scenario.map, goals, base, *options.steam,
                                               options.policy.blocked_logit, options.observation_radius);
    }
    std::unique_ptr<ExternalPolicy> external;
    Rng rng(seed);

    auto all_home = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            if (positions[i] != goals[i]) {
                return false;
            }
        }
        return true;
    };

    int t = 0;
    std::vector<Observation> observations(n);
    std::vector<LogitVector> logits(n);
    std::vector<Vertex> proposed(n);
    try {
        if (options.policy.kind == PolicyKind::External) {
            external = std::make_unique<ExternalPolicy>(options.policy.command,
                                                        std::chrono::milliseconds(options.policy.timeout_ms));
        }
        for (;;) {
            if (all_home()) {
                report.status = EpisodeStatus::Success;
                break;
            }
            if (t >= scenario.max_steps) {
                report.status = EpisodeStatus::Failure;
                break;
            }
            const auto step_start = Clock::now();
            double steam_time = 0.0;

            if (engine) {
                const auto s = Clock::now();
                engine->step(t, positions);
                steam_time += seconds_since(s);
            }
            const Occupancy occupancy(scenario.map, positions);
            for (std::size_t i = 0; i < n; ++i) {
                const CostField& field = engine ? engine->channel_field(i) : base.fields[i];
                const WeightField& w = engine ? engine->effective_weights(i) : base.weights[i];
                observations[i] = build_observation(scenario.map, occupancy, i, goals[i],
                                                    local_channel(field, w, positions[i], window));
            }
            if (external) {
                logits = external->query(t, observations);
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    logits[i] = greedy_logits(observations[i], options.policy);
                }
            }

            StepTrace trace;
            if (options.record_trace) {
                trace.step = t;
                trace.logits = logits;
            }
            if (engine) {
                const auto s = Clock::now();
                for (std::size_t i = 0; i < n; ++i) {
                    const auto temporal = engine->temporal_delta(i, positions[i]);
                    const auto after_time = plus(logits[i], temporal);
                    const auto emergent = engine->emergent_delta(t, i, after_time, positions);
                    logits[i] = plus(after_time, emergent);
                    if (options.record_trace) {
                        trace.temporal.push_back(temporal);
                        trace.emergent.push_back(emergent);
                    }
                }
                steam_time += seconds_since(s);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const Action a = select_action(logits[i], options.policy, rng);
                proposed[i] = next_vertex(scenario.map, positions[i], a);
                if (options.record_trace) {
                    trace.actions.push_back(a);
                }
            }
            report.step_seconds.push_back(seconds_since(step_start));
            report.steam_seconds.push_back(steam_time);
            if (options.record_trace) {
                report.trace.push_back(std::move(trace));
            }

            positions = resolve_moves(positions, proposed);
            for (std::size_t i = 0; i < n; ++i) {
                report.trajectories[i].push_back(positions[i]);
            }
            ++t;
        }
    } catch (const PolicyError& e) {
        report.status = EpisodeStatus::InfrastructureFailure;
        report.error = std::string(to_string(e.code())) + ": " + e.what();
    }

    report.steps = t;
    report.agent_costs.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& traj = report.trajectories[i];
        int c = t;
        if (traj.back() == goals[i]) {
            while (c > 0 && traj[static_cast<std::size_t>(c - 1)] == goals[i]) {
                --c;
            }
        }
        report.agent_costs[i] = c;
        report.sum_of_costs += c;
        report.makespan = std::max(report.makespan, c);
    }
    if (n >= 2) {
        report.density = compute_density(report.trajectories, options.density_radius, options.density_norm);
    }
    if (engine) {
        report.steam = engine->stats();
    }
    return report;
}

double compute_density(const std::vector<std::vector<Vertex>>& trajectories, int radius, DistanceNorm norm) {
    const std::size_t n = trajectories.size();
    if (n < 2) {
        throw Error(ErrorCode::SingleAgent, "density needs at least two agents");
    }
    const std::size_t length = trajectories.front().size();
    if (length == 0) {
        throw Error(ErrorCode::EmptyInput, "density needs at least one recorded step");
    }
    for (const auto& traj : trajectories) {
        if (traj.size() != length) {
            throw Error(ErrorCode::LengthMismatch, "trajectories differ in length");
        }
    }
    const std::size_t first = length > 1 ? 1 : 0;
    double total = 0.0;
    for (std::size_t t = first; t < length; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t near = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && distance(trajectories[i][t], trajectories[j][t], norm) <= radius) {
                    ++near;
                }
            }
            total += static_cast<double>(near) / static_cast<double>(n - 1);
        }
    }
    return total / (static_cast<double>(length - first) * static_cast<double>(n));
}

double compute_density(std::span<const std::vector<std::vector<Vertex>>> episodes, int radius, DistanceNorm norm) {
    if (episodes.empty()) {
        throw Error(ErrorCode::EmptyInput, "density needs at least one episode");
    }
    double total = 0.0;
    for (const auto& e : episodes) {
        total += compute_density(e, radius, norm);
    }
    return total / static_cast<double>(episodes.size());
}

Interval mean_interval(std::span<const double> xs) {
    Interval out;
    if (xs.empty()) {
        return out;
    }
    out.mean = mean(xs);
    if (xs.size() < 2) {
        return out;
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - out.mean) * (x - out.mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    out.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
    return out;
}

ArmSummary aggregate_reports(std::span<const EpisodeReport> reports) {
    if (reports.empty()) {
        throw Error(ErrorCode::EmptyInput, "no episode reports to aggregate");
    }
    ArmSummary s;
    s.config_hash = reports.front().config_hash;
    s.episodes = reports.size();
    std::vector<double> success, makespan, soc, density, step_ms, steam_ms;
    for (const auto& r : reports) {
        if (r.config_hash != s.config_hash) {
            throw Error(ErrorCode::MixedConfig, "episode reports come from different configurations");
        }
        if (r.steam_noop()) {
            ++s.steam_noop_episodes;
        }
        if (r.status == EpisodeStatus::InfrastructureFailure) {
            ++s.infrastructure_failures;
            continue;
        }
        s.successes += r.success() ? 1 : 0;
        success.push_back(r.success() ? 1.0 : 0.0);
        makespan.push_back(r.makespan);
        soc.push_back(static_cast<double>(r.sum_of_costs));
        density.push_back(r.density);
        step_ms.push_back(1e3 * r.mean_step_seconds());
        steam_ms.push_back(1e3 * r.mean_steam_seconds());
    }
    s.success_rate = mean_interval(success);
    s.makespan = mean_interval(makespan);
    s.sum_of_costs = mean_interval(soc);
    s.density = mean_interval(density);
    s.step_ms = mean_interval(step_ms);
    s.steam_ms = mean_interval(steam_ms);
    return s;
}

PairedDelta paired_delta(std::span<const EpisodeReport> on, std::span<const EpisodeReport> off) {
    if (on.size() != off.size()) {
        throw Error(ErrorCode::LengthMismatch, "paired arms differ in episode count");
    }
    PairedDelta d;
    std::vector<double> success, makespan, soc, density, step_ms;
    for (std::size_t k = 0; k < on.size(); ++k) {
        if (on[k].seed != off[k].seed) {
            throw Error(ErrorCode::MixedConfig, "paired episodes use different seeds");
        }
        if (on[k].status == EpisodeStatus::InfrastructureFailure ||
            off[k].status == EpisodeStatus::InfrastructureFailure) {
            continue;
        }
        ++d.pairs;
        const int ds = (on[k].success() ? 1 : 0) - (off[k].success() ? 1 : 0);
        d.success_delta += ds;
        success.push_back(ds);
        makespan.push_back(on[k].makespan - off[k].makespan);
        soc.push_back(static_cast<double>(on[k].sum_of_costs - off[k].sum_of_costs));
        density.push_back(on[k].density - off[k].density);
        step_ms.push_back(1e3 * (on[k].mean_step_seconds() - off[k].mean_step_seconds()));
    }
    d.success_rate = mean_interval(success);
    d.makespan = mean_interval(makespan);
    d.sum_of_costs = mean_interval(soc);
    d.density = mean_interval(density);
    d.step_ms = mean_interval(step_ms);
    return d;
}

} // namespace steam_mapf
