#include "steam_mapf/bench.hpp"

#include "steam_mapf/error.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace steam_mapf {

namespace {

Json number(double x) {
    if (std::isfinite(x)) {
        return x;
    }
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

Json logits_json(const std::vector<LogitVector>& rows) {
    Json out = Json::array();
    for (const auto& row : rows) {
        Json r = Json::array();
        for (double x : row) {
            r.push_back(number(x));
        }
        out.push_back(std::move(r));
    }
    return out;
}

Json interval_json(const Interval& i) { return Json{{"mean", i.mean}, {"ci95", i.ci95}}; }

Json stats_json(const SteamStats& s) {
    Json j;
    j["rounds"] = s.rounds;
    j["congestion_points"] = s.congestion_points;
    j["spatial_interventions"] = s.spatial_interventions;
    j["temporal_assignments"] = s.temporal_assignments;
    j["emergent_corrections"] = s.emergent_corrections;
    j["approximate_covers"] = s.approximate_covers;
    return j;
}

std::string fixed(double x, int digits) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << x;
    return out.str();
}

} // namespace

int default_jobs() {
    if (const char* env = std::getenv("STEAM_MAPF_JOBS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) {
            return static_cast<int>(v);
        }
    }
    return 1;
}

Scenario bench_scenario(const RunConfig& config, const std::vector<Scenario>& files, std::size_t index) {
    Scenario s;
    if (config.generator) {
        GenSpec spec = *config.generator;
        spec.seed = episode_seed(config.seed, index);
        s = generate(spec);
    } else {
        s = files.at(index % files.size());
    }
    if (config.max_steps) {
        s.max_steps = *config.max_steps;
    }
    return s;
}

BenchReport run_bench(const RunConfig& config, int jobs) {
    config.validate();
    std::vector<Scenario> files;
    for (const auto& path : config.scenario_files) {
        files.push_back(load_scenario(path));
    }

    BenchReport report;
    report.config = config;
    const auto episodes = static_cast<std::size_t>(config.episodes);
    for (std::size_t k = 0; k < episodes; ++k) {
        report.seeds.push_back(episode_seed(config.seed, k));
    }
    if (config.arms != Arms::On) {
        report.arms.push_back({"baseline", false, {}, {}});
    }
    if (config.arms != Arms::Off) {
        report.arms.push_back({"steam", true, {}, {}});
    }
    for (auto& arm : report.arms) {
        arm.episodes.resize(episodes);
    }

    // Scenarios are generated once and shared by both arms of an episode.
    std::vector<Scenario> scenarios(episodes);
    const std::size_t tasks = episodes * report.arms.size();
    std::atomic<std::size_t> next_scenario{0};
    std::atomic<std::size_t> next_task{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&](auto&& body, std::atomic<std::size_t>& counter, std::size_t total) {
        for (;;) {
            const std::size_t k = counter.fetch_add(1);
            if (k >= total) {
                return;
            }
            try {
                body(k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    auto parallel = [&](auto&& body, std::atomic<std::size_t>& counter, std::size_t total) {
        const auto threads = static_cast<std::size_t>(std::max(1, jobs));
        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < std::min(threads, total); ++w) {
            pool.emplace_back([&] { worker(body, counter, total); });
        }
        worker(body, counter, total);
        for (auto& th : pool) {
            th.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    };

    parallel([&](std::size_t k) { scenarios[k] = bench_scenario(config, files, k); }, next_scenario, episodes);
    parallel(
        [&](std::size_t task) {
            const std::size_t k = task / report.arms.size();
            auto& arm = report.arms[task % report.arms.size()];
            arm.episodes[k] = run_episode(scenarios[k], config.episode_options(arm.steam), report.seeds[k]);
        },
        next_task, tasks);

    for (auto& arm : report.arms) {
        arm.summary = aggregate_reports(arm.episodes);
    }
    if (report.arms.size() == 2) {
        report.delta = paired_delta(report.arms[1].episodes, report.arms[0].episodes);
    }
    return report;
}

Json encode_trajectory(const std::vector<Vertex>& trajectory) {
    Json out = Json::array();
    for (std::size_t k = 0; k < trajectory.size();) {
        std::size_t run = 1;
        while (k + run < trajectory.size() && trajectory[k + run] == trajectory[k]) {
            ++run;
        }
        out.push_back(Json::array({trajectory[k].row, trajectory[k].col, run}));
        k += run;
    }
    return out;
}

Json to_json(const EpisodeReport& r, bool with_trajectories, bool with_trace) {
    Json j;
    j["seed"] = r.seed;
    j["config_hash"] = hex64(r.config_hash);
    j["status"] = to_string(r.status);
    j["success"] = r.success();
    j["steps"] = r.steps;
    j["makespan"] = r.makespan;
    j["sum_of_costs"] = r.sum_of_costs;
    j["agent_costs"] = r.agent_costs;
    j["density"] = r.density;
    j["steam_enabled"] = r.steam_enabled;
    j["steam_noop"] = r.steam_noop();
    j["steam"] = stats_json(r.steam);
    if (!r.error.empty()) {
        j["error"] = r.error;
    }
    if (with_trajectories) {
        Json trajectories = Json::array();
        for (const auto& traj : r.trajectories) {
            trajectories.push_back(encode_trajectory(traj));
        }
        j["trajectories"] = std::move(trajectories);
    }
    if (with_trace) {
        Json trace = Json::array();
        for (const auto& s : r.trace) {
            Json step;
            step["step"] = s.step;
            step["logits"] = logits_json(s.logits);
            step["temporal"] = logits_json(s.temporal);
            step["emergent"] = logits_json(s.emergent);
            Json actions = Json::array();
            for (Action a : s.actions) {
                actions.push_back(to_string(a));
            }
            step["actions"] = std::move(actions);
            trace.push_back(std::move(step));
        }
        j["trace"] = std::move(trace);
    }
    Json timing;
    timing["mean_step_ms"] = 1e3 * r.mean_step_seconds();
    timing["mean_steam_ms"] = 1e3 * r.mean_steam_seconds();
    if (with_trajectories) {
        Json steps = Json::array();
        Json steam = Json::array();
        for (std::size_t k = 0; k < r.step_seconds.size(); ++k) {
            steps.push_back(1e3 * r.step_seconds[k]);
            steam.push_back(1e3 * r.steam_seconds[k]);
        }
        timing["step_ms"] = std::move(steps);
        timing["steam_ms"] = std::move(steam);
    }
    j["timing"] = std::move(timing);
    return j;
}

Json to_json(const ArmSummary& s) {
    Json j;
    j["config_hash"] = hex64(s.config_hash);
    j["episodes"] = s.episodes;
    j["successes"] = s.successes;
    j["infrastructure_failures"] = s.infrastructure_failures;
    j["steam_noop_episodes"] = s.steam_noop_episodes;
    j["success_rate"] = interval_json(s.success_rate);
    j["makespan"] = interval_json(s.makespan);
    j["sum_of_costs"] = interval_json(s.sum_of_costs);
    j["density"] = interval_json(s.density);
    j["timing"] = Json{{"step_ms", interval_json(s.step_ms)}, {"steam_ms", interval_json(s.steam_ms)}};
    return j;
}

Json to_json(const PairedDelta& d) {
    Json j;
    j["pairs"] = d.pairs;
    j["success_delta"] = d.success_delta;
    j["success_rate"] = interval_json(d.success_rate);
    j["makespan"] = interval_json(d.makespan);
    j["sum_of_costs"] = interval_json(d.sum_of_costs);
    j["density"] = interval_json(d.density);
    j["timing"] = Json{{"step_ms", interval_json(d.step_ms)}};
    return j;
}

Json to_json(const BenchReport& b) {
    Json j;
    j["config"] = to_json(b.config);
    j["arbitration"] = "lowest-index";
    j["seeds"] = b.seeds;
    Json arms = Json::array();
    for (const auto& arm : b.arms) {
        Json a;
        a["arm"] = arm.name;
        a["summary"] = to_json(arm.summary);
        Json episodes = Json::array();
        for (const auto& e : arm.episodes) {
            episodes.push_back(to_json(e, false, false));
        }
        a["episodes"] = std::move(episodes);
        arms.push_back(std::move(a));
    }
    j["arms"] = std::move(arms);
    j["delta"] = b.delta ? to_json(*b.delta) : Json(nullptr);
    return j;
}

Json strip_timing(Json j) {
    if (j.is_object()) {
        j.erase("timing");
        for (auto& [key, value] : j.items()) {
            value = strip_timing(std::move(value));
        }
    } else if (j.is_array()) {
        for (auto& value : j) {
            value = strip_timing(std::move(value));
        }
    }
    return j;
}

std::string to_csv(const BenchReport& b) {
    std::ostringstream out;
    out << "row,arm,config_hash,episodes,successes,infrastructure_failures,success_rate,success_rate_ci95,"
           "makespan,makespan_ci95,sum_of_costs,sum_of_costs_ci95,density,density_ci95,step_ms,step_ms_ci95,"
           "steam_ms,steam_ms_ci95\n";
    out << std::setprecision(10);
    for (const auto& arm : b.arms) {
        const auto& s = arm.summary;
        out << "aggregate," << arm.name << ',' << hex64(s.config_hash) << ',' << s.episodes << ',' << s.successes
            << ',' << s.infrastructure_failures << ',' << s.success_rate.mean << ',' << s.success_rate.ci95 << ','
            << s.makespan.mean << ',' << s.makespan.ci95 << ',' << s.sum_of_costs.mean << ','
            << s.sum_of_costs.ci95 << ',' << s.density.mean << ',' << s.density.ci95 << ',' << s.step_ms.mean
            << ',' << s.step_ms.ci95 << ',' << s.steam_ms.mean << ',' << s.steam_ms.ci95 << '\n';
    }
    if (b.delta) {
        const auto& d = *b.delta;
        out << "delta,steam-baseline,," << d.pairs << ',' << d.success_delta << ",," << d.success_rate.mean << ','
            << d.success_rate.ci95 << ',' << d.makespan.mean << ',' << d.makespan.ci95 << ','
            << d.sum_of_costs.mean << ',' << d.sum_of_costs.ci95 << ',' << d.density.mean << ','
            << d.density.ci95 << ',' << d.step_ms.mean << ',' << d.step_ms.ci95 << ",,\n";
    }
    return out.str();
}

std::string render_report(const Json& bench) {
    if (!bench.is_object() || !bench.contains("arms") || !bench["arms"].is_array()) {
        throw Error(ErrorCode::InvalidConfig, "not a bench report: missing \"arms\"");
    }
    auto cell = [](const Json& interval, int digits) {
        return fixed(interval.at("mean").get<double>(), digits) + " +- " +
               fixed(interval.at("ci95").get<double>(), digits);
    };
    std::ostringstream out;
    out << std::left << std::setw(10) << "arm" << std::setw(10) << "episodes" << std::setw(20) << "success"
        << std::setw(22) << "makespan" << std::setw(24) << "sum_of_costs" << std::setw(20) << "density"
        << "step_ms\n";
    for (const auto& arm : bench["arms"]) {
        const auto& s = arm.at("summary");
        out << std::setw(10) << arm.at("arm").get<std::string>() << std::setw(10) << s.at("episodes").get<int>()
            << std::setw(20) << cell(s.at("success_rate"), 3) << std::setw(22) << cell(s.at("makespan"), 2)
            << std::setw(24) << cell(s.at("sum_of_costs"), 1) << std::setw(20) << cell(s.at("density"), 4);
        if (s.contains("timing")) {
            out << cell(s.at("timing").at("step_ms"), 3);
        }
        out << '\n';
    }
    if (bench.contains("delta") && bench["delta"].is_object()) {
        const auto& d = bench["delta"];
        out << std::setw(10) << "delta" << std::setw(10) << d.at("pairs").get<int>() << std::setw(20)
            << (std::to_string(d.at("success_delta").get<long long>()) + " episodes") << std::setw(22)
            << cell(d.at("makespan"), 2) << std::setw(24) << cell(d.at("sum_of_costs"), 1) << std::setw(20)
            << cell(d.at("density"), 4);
        if (d.contains("timing")) {
            out << cell(d.at("timing").at("step_ms"), 3);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace steam_mapf
