// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "steam_mapf/bench.hpp"
#include "steam_mapf/cost_field.hpp"
#include "steam_mapf/executor.hpp"
#include "steam_mapf/generator.hpp"
#include "steam_mapf/steam.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace steam_mapf;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Verdict cost_fields_match_bfs() {
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> density(0.0, 0.4);
    const auto t0 = Clock::now();
    std::size_t mismatches = 0, cells = 0;
    for (int k = 0; k < 1000; ++k) {
        const GridMap m = oracle::random_map(16, 16, density(rng), rng);
        const auto free = oracle::free_cells(m);
        if (free.empty()) continue;
        const Vertex t = free[rng() % free.size()];
        const CostField f = compute_cost_field(m, WeightField::uniform(m), t);
        const auto hops = oracle::bfs_hops(m, t);
        for (Vertex v : free) {
            const int h = hops[m.index(v)];
            mismatches += f.at(v) != (h < 0 ? kInfinity : static_cast<double>(h));
            ++cells;
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 10.0,
            fmt("1000 maps, %zu cells, %zu mismatches, %.2f s (limit 10 s)", cells, mismatches, secs)};
}

Verdict bellman_consistency() {
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> weight(0.5, 4.0), density(0.0, 0.4);
    double worst = 0.0;
    std::size_t violations = 0;
    for (int k = 0; k < 200; ++k) {
        const GridMap m = oracle::random_map(16, 16, density(rng), rng);
        const auto free = oracle::free_cells(m);
        if (free.empty()) continue;
        std::vector<double> w(m.cell_count(), kInfinity);
        for (Vertex v : free) w[m.index(v)] = weight(rng);
        const Vertex t = free[rng() % free.size()];
        const CostField f = compute_cost_field(m, WeightField(m, w), t);
        const auto hops = oracle::bfs_hops(m, t);
        for (Vertex v : free) {
            if (v == t) {
                violations += f.at(v) != 0.0;
                continue;
            }
            double best = kInfinity;
            for (Vertex u : oracle::neighbors(m, v)) best = std::min(best, w[m.index(u)] + f.at(u));
            const bool reachable = hops[m.index(v)] >= 0;
            if (reachable != (f.at(v) < kInfinity) || (reachable && std::abs(best - f.at(v)) > 1e-9)) {
                ++violations;
            }
            if (reachable) worst = std::max(worst, std::abs(best - f.at(v)));
        }
    }
    return {violations == 0, fmt("200 maps, %zu violations, max residual %.3g (tolerance 1e-9)", violations, worst)};
}

Verdict probe_classification() {
    std::mt19937_64 rng(1003);
    int instances = 0, mismatches = 0, avoidable = 0;
    while (instances < 500) {
        const GridMap m = oracle::random_map(8, 8, 0.2 + 0.2 * (instances % 3) / 2.0, rng);
        auto free = oracle::free_cells(m);
        if (free.size() < 4) continue;
        std::shuffle(free.begin(), free.end(), rng);
        const std::vector<Vertex> starts{free[0], free[1]}, goals{free[2], free[3]};
        const BaseRouting base = BaseRouting::uniform(m, goals);
        if (!base.fields[0].reachable(starts[0]) || !base.fields[1].reachable(starts[1])) continue;
        // Inject a point on agent 0's rollout; agent 1 is anywhere.
        const auto path = rollout_paths(starts, base.all())[0];
        const int h = 1 + static_cast<int>(rng() % (path.length() + 2));
        const Vertex v = path.at(static_cast<std::size_t>(h));
        if (v == starts[0] || v == starts[1]) continue;
        ++instances;

        const CongestionPoint p{0, 1, v, h};
        const double lambda = default_probe_penalty(m, base.weights);
        const ProbeOutcome got = probe_spatial(p, m, starts, goals, base.all(), lambda);

        std::array<bool, 2> bypass{};
        std::array<double, 2> detour{};
        const std::vector<double> unit(base.weights[0].values().begin(), base.weights[0].values().end());
        for (std::size_t r = 0; r < 2; ++r) {
            bypass[r] = v != goals[r] && oracle::path_avoiding_exists(m, starts[r], goals[r], v);
            if (bypass[r]) {
                detour[r] = oracle::slow_costs(m, unit, goals[r], v)[m.index(starts[r])] -
                            oracle::slow_costs(m, unit, goals[r])[m.index(starts[r])];
            }
        }
        const bool expect_avoidable = bypass[0] || bypass[1];
        avoidable += expect_avoidable;
        bool ok = got.avoidable == expect_avoidable;
        if (ok && expect_avoidable) {
            const std::size_t k = bypass[0] && (!bypass[1] || detour[0] <= detour[1]) ? 0 : 1;
            ok = got.agent == k && got.detour == detour[k];
        }
        mismatches += !ok;
    }
    return {mismatches == 0,
            fmt("500 instances (%d avoidable, %d temporal-only), %d mismatches", avoidable, 500 - avoidable,
                mismatches)};
}

Verdict cover_minimality() {
    std::mt19937_64 rng(1004);
    int wrong_size = 0, uncovered = 0, checked_small = 0, checked_large = 0;
    auto run = [&](std::size_t n, double p, bool brute) {
        std::vector<CongestionPoint> points;
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (std::uniform_real_distribution<double>(0, 1)(rng) < p) {
                    edges.emplace_back(i, j);
                    points.push_back({i, j, {int(i), int(j)}, 1 + int(rng() % 5)});
                }
            }
        }
        const CoverSelection c = select_cover(points);
        const std::set<std::size_t> in(c.agents.begin(), c.agents.end());
        for (auto [a, b] : edges) uncovered += !(in.count(a) || in.count(b));
        if (brute) {
            wrong_size += c.agents.size() != oracle::brute_force_cover(edges, n).size();
            ++checked_small;
        } else {
            ++checked_large;
        }
    };
    for (int k = 0; k < 500; ++k) run(1 + rng() % 12, 0.05 + 0.7 * (k % 10) / 10.0, true);
    for (int k = 0; k < 100; ++k) run(13 + rng() % 60, 0.02 + 0.2 * (k % 5) / 5.0, false);
    return {wrong_size == 0 && uncovered == 0,
            fmt("%d graphs <= 12 agents: %d size mismatches; %d larger graphs; %d uncovered edges overall",
                checked_small, wrong_size, checked_large, uncovered)};
}

Verdict noop_guarantee() {
    EpisodeOptions off, on;
    on.steam = SteamConfig{};
    int single = 0, single_diff = 0, multi = 0, multi_diff = 0;
    for (std::uint64_t seed = 0; single < 100; ++seed) {
        GenSpec spec = GenSpec::defaults(static_cast<MapFamily>(seed % 3));
        spec.agent_count = 1;
        spec.seed = seed;
        const Scenario s = generate(spec);
        const EpisodeReport a = run_episode(s, off, seed), b = run_episode(s, on, seed);
        single_diff += a.trajectories != b.trajectories || !b.steam_noop();
        ++single;
    }
    // Sparse multi-agent episodes; only those in which nothing was ever
    // detected count: no rollout conflict and no local crowding, which the
    // emergent term picks up on its own.
    for (std::uint64_t seed = 0; seed < 400 && multi < 50; ++seed) {
        GenSpec spec;
        spec.width = spec.height = 32;
        spec.agent_count = 2 + static_cast<int>(seed % 4);
        spec.seed = 5000 + seed;
        const Scenario s = generate(spec);
        const EpisodeReport b = run_episode(s, on, spec.seed);
        if (b.steam.congestion_points != 0 || !b.steam_noop()) continue;
        ++multi;
        multi_diff += run_episode(s, off, spec.seed).trajectories != b.trajectories;
    }
    return {single_diff == 0 && multi_diff == 0 && multi >= 20,
            fmt("%d single-agent episodes (%d differ); %d congestion-free multi-agent episodes (%d differ)", single,
                single_diff, multi, multi_diff)};
}

Verdict correction_signs() {
    int violations = 0;
    std::size_t samples = 0;
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
        GenSpec spec;
        spec.width = spec.height = 16;
        spec.agent_count = 16 + static_cast<int>(seed % 3) * 8;
        spec.seed = 9000 + seed;
        const Scenario s = generate(spec);
        EpisodeOptions o;
        o.steam = SteamConfig{};
        o.record_trace = true;
        const EpisodeReport r = run_episode(s, o, spec.seed);
        const auto goals = s.goals();
        for (const auto& st : r.trace) {
            std::vector<Vertex> pos;
            for (const auto& traj : r.trajectories) pos.push_back(traj[static_cast<std::size_t>(st.step)]);
            for (std::size_t i = 0; i < pos.size(); ++i) {
                const auto& tmp = st.temporal[i];
                const auto& em = st.emergent[i];
                violations += tmp[0] != 0.0;
                LogitVector after;
                for (std::size_t a = 0; a < kActionCount; ++a) {
                    violations += tmp[a] > 0.0 || em[a] > 0.0;
                    if (next_vertex(s.map, pos[i], kActions[a]) == pos[i]) violations += tmp[a] != 0.0;
                    after[a] = st.logits[i][a] + tmp[a];
                }
                const double sigma = logit_spread(after, o.policy.blocked_logit, true);
                const auto nb = window_neighbors(i, pos, goals, o.observation_radius);
                const double bound = o.steam->alpha * sigma * static_cast<double>(nb.size());
                for (double x : em) violations += -x > bound * (1.0 + 1e-12) + 1e-12;
                ++samples;
            }
        }
    }

    // Corridor fixture. The stated tolerance is below the O(eps) shift that
    // eps = 1e-6 itself causes (lambda = 4 - 2e-6), so eps is set well below it.
    const GridMap corridor = GridMap::empty(5, 1);
    const std::vector<Vertex> starts{{0, 0}, {0, 4}}, goals{{0, 4}, {0, 0}};
    const BaseRouting base = BaseRouting::uniform(corridor, goals);
    SteamConfig cfg;
    cfg.gamma_time = cfg.gamma_dist = 4.0;
    cfg.epsilon = 1e-9;
    SteamEngine engine(corridor, goals, base, cfg, 1e6, 5);
    engine.step(0, starts);
    const auto& asg = engine.last_round().assignments;
    const bool shape = asg.size() == 1 && asg[0].agent == 0 && asg[0].h == 2 && asg[0].v == Vertex{0, 2};
    const LogitVector d = engine.temporal_delta(0, starts[0]);
    const bool corridor_ok = shape && std::abs(d[4] + 4.0) <= 1e-6 && d[0] == 0.0 && d[3] == 0.0;

    SteamEngine literal(corridor, goals, base, SteamConfig{}, 1e6, 5);
    literal.step(0, starts);
    const double at_default_eps = literal.temporal_delta(0, starts[0])[4];
    return {violations == 0 && corridor_ok,
            fmt("%zu agent-steps, %d sign/bound violations; corridor delta(Right) = %.9f (eps 1e-9), "
                "%.9f at the default eps 1e-6",
                samples, violations, d[4], at_default_eps)};
}

std::size_t count_conflicts(const EpisodeReport& r) {
    std::size_t bad = 0;
    const std::size_t n = r.trajectories.size();
    for (std::size_t t = 1; t <= static_cast<std::size_t>(r.steps); ++t) {
        std::vector<Vertex> prev(n), next(n);
        for (std::size_t i = 0; i < n; ++i) {
            prev[i] = r.trajectories[i][t - 1];
            next[i] = r.trajectories[i][t];
            bad += std::abs(prev[i].row - next[i].row) + std::abs(prev[i].col - next[i].col) > 1;
        }
        bad += find_transition_conflicts(prev, next).size();
    }
    return bad;
}

RunConfig trend_config() {
    RunConfig c;
    GenSpec g;
    g.width = g.height = 16;
    g.obstacle_density = 0.2;
    g.agent_count = 16;
    c.generator = g;
    c.episodes = 64;
    c.seed = 0;
    return c;
}

const ArmResult& arm(const BenchReport& b, bool steam) { return b.arms[0].steam == steam ? b.arms[0] : b.arms[1]; }

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Verdict& v) {
        std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    };

    report(1, "cost fields match BFS", cost_fields_match_bfs());
    report(2, "Bellman consistency", bellman_consistency());
    report(3, "probe classification", probe_classification());
    report(4, "cover minimality", cover_minimality());
    report(5, "no-op guarantee", noop_guarantee());
    report(6, "correction signs", correction_signs());

    const int jobs = default_jobs();
    const auto t0 = Clock::now();
    const BenchReport trend = run_bench(trend_config(), jobs);
    const double trend_secs = seconds_since(t0);

    RunConfig overhead_cfg;
    GenSpec g;
    g.width = g.height = 32;
    g.agent_count = 32;
    overhead_cfg.generator = g;
    overhead_cfg.episodes = 16;
    overhead_cfg.seed = 2024;
    run_bench(overhead_cfg, 1);  // warm-up
    const BenchReport overhead = run_bench(overhead_cfg, 1);

    const BenchReport again = run_bench(trend_config(), jobs == 1 ? 2 : 1);

    std::size_t episodes = 0, conflicts = 0;
    for (const BenchReport* b : {&trend, &overhead, &again}) {
        for (const auto& a : b->arms) {
            for (const auto& e : a.episodes) {
                conflicts += count_conflicts(e);
                ++episodes;
            }
        }
    }
    report(7, "feasibility", {conflicts == 0, fmt("%zu benchmark episodes, %zu conflicts", episodes, conflicts)});

    const auto& on = arm(trend, true).summary;
    const auto& off = arm(trend, false).summary;
    const long long delta = trend.delta->success_delta;
    report(8, "success trend",
           {on.successes >= off.successes && delta >= 5,
            fmt("64 paired seeds: STEAM %zu vs baseline %zu successes, paired delta %+lld (need >= +5), %.1f s",
                on.successes, off.successes, delta, trend_secs)});
    report(9, "density trend",
           {on.density.mean <= off.density.mean,
            fmt("mean density STEAM %.4f vs baseline %.4f", on.density.mean, off.density.mean)});

    const double ratio = arm(overhead, true).summary.step_ms.mean / arm(overhead, false).summary.step_ms.mean;
    report(10, "overhead bound",
           {ratio <= 3.0, fmt("32 agents on 32x32, 16 episodes: %.4f vs %.4f ms/step, ratio %.2f (limit 3)",
                              arm(overhead, true).summary.step_ms.mean, arm(overhead, false).summary.step_ms.mean,
                              ratio)});

    const std::string a = strip_timing(to_json(trend)).dump(2), b = strip_timing(to_json(again)).dump(2);
    report(11, "determinism",
           {a == b, fmt("two runs of the trend benchmark (jobs %d and %d): %zu bytes each, %s", jobs,
                        jobs == 1 ? 2 : 1, a.size(), a == b ? "identical" : "different")});

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
