#include "steam_mapf/bench.hpp"
#include "steam_mapf/config.hpp"
#include "steam_mapf/error.hpp"
#include "steam_mapf/executor.hpp"
#include "steam_mapf/generator.hpp"
#include "steam_mapf/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;
using namespace steam_mapf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kInfrastructure = 3 };

struct GenFlags {
    std::string family;
    int size = 0;
    int width = 0;
    int height = 0;
    double density = -1.0;
    int agents = 0;
};

void add_gen_flags(CLI::App* cmd, GenFlags& g) {
    cmd->add_option("--family", g.family, "Map family")->check(CLI::IsMember({"random", "maze", "warehouse"}));
    cmd->add_option("--size", g.size, "Square map side")->check(CLI::PositiveNumber);
    cmd->add_option("--width", g.width, "Map width")->check(CLI::PositiveNumber);
    cmd->add_option("--height", g.height, "Map height")->check(CLI::PositiveNumber);
    cmd->add_option("--density", g.density, "Obstacle density in [0, 1)")
        ->check(CLI::Range(0.0, 1.0))
        ->check([](const std::string& s) { return std::stod(s) < 1.0 ? "" : "density must be below 1"; });
    cmd->add_option("--agents", g.agents, "Number of agents")->check(CLI::PositiveNumber);
}

bool any_gen_flag(const GenFlags& g) {
    return !g.family.empty() || g.size || g.width || g.height || g.density >= 0.0 || g.agents;
}

GenSpec apply_gen_flags(const GenFlags& g, std::optional<GenSpec> base) {
    GenSpec spec = base.value_or(GenSpec::defaults(MapFamily::Random));
    if (!g.family.empty()) {
        const auto family = *parse_family(g.family);
        if (family != spec.family) {
            const GenSpec d = GenSpec::defaults(family);
            spec.family = family;
            spec.width = d.width;
            spec.height = d.height;
            spec.obstacle_density = d.obstacle_density;
        }
    }
    if (g.size) {
        spec.width = spec.height = g.size;
    }
    if (g.width) spec.width = g.width;
    if (g.height) spec.height = g.height;
    if (g.density >= 0.0) spec.obstacle_density = g.density;
    if (g.agents) spec.agent_count = g.agents;
    return spec;
}

struct RunFlags {
    std::string config;
    std::vector<std::string> scenarios;
    GenFlags gen;
    std::string steam;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    std::optional<int> max_steps;
    std::string policy_cmd;
    std::string out;
    std::string format;
};

RunConfig build_config(const RunFlags& f) {
    RunConfig c;
    if (!f.config.empty()) {
        c = load_run_config(f.config);
    } else {
        c.generator = GenSpec::defaults(MapFamily::Random);
    }
    if (!f.scenarios.empty()) {
        c.scenario_files = f.scenarios;
        c.generator.reset();
    }
    if (any_gen_flag(f.gen)) {
        c.generator = apply_gen_flags(f.gen, c.generator);
        c.scenario_files.clear();
    }
    if (f.steam == "on") c.arms = Arms::On;
    if (f.steam == "off") c.arms = Arms::Off;
    if (f.steam == "both") c.arms = Arms::Both;
    if (f.seed) c.seed = *f.seed;
    if (f.episodes) c.episodes = *f.episodes;
    if (f.max_steps) c.max_steps = *f.max_steps;
    if (!f.policy_cmd.empty()) {
        std::istringstream words(f.policy_cmd);
        c.policy.command.assign(std::istream_iterator<std::string>(words), {});
        c.policy.kind = PolicyKind::External;
    }
    if (!f.out.empty()) c.output = f.out;
    if (f.format == "json") c.format = ReportFormat::Json;
    if (f.format == "csv") c.format = ReportFormat::Csv;
    c.validate();
    return c;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path);
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::Io, "failed writing " + path);
    }
}

void write_file(const fs::path& path, const std::string& text) { write_output(path.string(), text); }

int cmd_gen(const GenFlags& g, int episodes, std::uint64_t seed, const std::string& out_dir) {
    GenSpec spec = apply_gen_flags(g, std::nullopt);
    spec.validate();
    fs::create_directories(out_dir);
    for (int k = 0; k < episodes; ++k) {
        spec.seed = episode_seed(seed, static_cast<std::size_t>(k));
        const Scenario s = generate(spec);
        const std::string stem = std::string(to_string(spec.family)) + "-" + std::to_string(spec.width) + "x" +
                                 std::to_string(spec.height) + "-" + std::to_string(k);
        write_file(fs::path(out_dir) / (stem + ".map"), write_map(s.map));
        write_file(fs::path(out_dir) / (stem + ".json"), scenario_to_json(s, stem + ".map"));
    }
    std::cerr << "wrote " << episodes << " scenarios to " << out_dir << "\n";
    return kOk;
}

int cmd_run(const RunFlags& f, bool trace) {
    RunFlags flags = f;
    if (flags.steam.empty()) {
        flags.steam = "on";
    }
    if (flags.steam == "both") {
        throw Error(ErrorCode::InvalidConfig, "run executes a single arm: use --steam on or --steam off");
    }
    const RunConfig c = build_config(flags);
    std::vector<Scenario> files;
    for (const auto& path : c.scenario_files) {
        files.push_back(load_scenario(path));
    }
    const Scenario s = bench_scenario(c, files, 0);
    EpisodeOptions options = c.episode_options(c.arms != Arms::Off);
    options.record_trace = trace;
    const EpisodeReport r = run_episode(s, options, episode_seed(c.seed, 0));
    Json doc = to_json(r, trace, trace);
    write_output(c.output, doc.dump(2) + "\n");
    if (r.status == EpisodeStatus::InfrastructureFailure) {
        std::cerr << "infrastructure failure: " << r.error << "\n";
        return kInfrastructure;
    }
    return kOk;
}

int cmd_bench(const RunFlags& f, int jobs) {
    const RunConfig c = build_config(f);
    const BenchReport b = run_bench(c, jobs);
    if (c.format == ReportFormat::Csv) {
        write_output(c.output, to_csv(b));
    } else {
        write_output(c.output, to_json(b).dump(2) + "\n");
    }
    std::cerr << render_report(to_json(b));
    for (const auto& arm : b.arms) {
        if (arm.summary.infrastructure_failures > 0) {
            std::cerr << arm.name << ": " << arm.summary.infrastructure_failures
                      << " episodes failed on the external policy\n";
            return kInfrastructure;
        }
    }
    return kOk;
}

int cmd_report(const std::string& in) {
    std::ifstream file(in);
    if (!file) {
        throw Error(ErrorCode::Io, "cannot open report " + in);
    }
    Json doc;
    try {
        doc = Json::parse(file);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Io, "report " + in + " is not valid JSON: " + e.what());
    }
    std::cout << render_report(doc);
    return kOk;
}

int exit_code(const Error& e) {
    switch (e.code()) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::Infeasible:
        return kUsage;
    case ErrorCode::ProtocolViolation:
    case ErrorCode::PolicyTimeout:
    case ErrorCode::ProcessExited:
        return kInfrastructure;
    default:
        return kIo;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized MAPF execution with congestion-aware logit corrections"};
    app.require_subcommand(1);

    GenFlags gen_flags;
    int gen_episodes = 1;
    std::uint64_t gen_seed = 0;
    std::string gen_out = ".";
    auto* gen = app.add_subcommand("gen", "Generate scenario files");
    add_gen_flags(gen, gen_flags);
    gen->add_option("--episodes", gen_episodes, "Number of scenarios")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "Master seed; scenario k uses seed xor k");
    gen->add_option("--out", gen_out, "Output directory");

    RunFlags run_flags;
    bool trace = false;
    auto* run = app.add_subcommand("run", "Run one episode and print its report");
    RunFlags bench_flags;
    int jobs = default_jobs();
    auto* bench = app.add_subcommand("bench", "Run paired baseline / STEAM episodes");

    for (auto [cmd, f] : {std::pair{run, &run_flags}, std::pair{bench, &bench_flags}}) {
        cmd->add_option("--config", f->config, "JSON run configuration");
        cmd->add_option("--scenario", f->scenarios, "Scenario file(s), used round robin");
        add_gen_flags(cmd, f->gen);
        cmd->add_option("--seed", f->seed, "Master seed");
        cmd->add_option("--max-steps", f->max_steps, "Step limit override")->check(CLI::PositiveNumber);
        cmd->add_option("--policy-cmd", f->policy_cmd, "External policy command line");
        cmd->add_option("--out", f->out, "Output file (default stdout)");
    }
    run->add_option("--steam", run_flags.steam, "on or off")->check(CLI::IsMember({"on", "off"}));
    run->add_flag("--trace", trace, "Record trajectories and per-step logits and corrections");
    bench->add_option("--steam", bench_flags.steam, "Arms to run")->check(CLI::IsMember({"both", "on", "off"}));
    bench->add_option("--episodes", bench_flags.episodes, "Episode count")->check(CLI::PositiveNumber);
    bench->add_option("--format", bench_flags.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    bench->add_option("--jobs", jobs, "Parallel episodes (default STEAM_MAPF_JOBS or 1)")
        ->check(CLI::PositiveNumber);

    std::string report_in;
    auto* report = app.add_subcommand("report", "Print the summary table of a bench JSON report");
    report->add_option("input", report_in, "Bench report")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) return cmd_gen(gen_flags, gen_episodes, gen_seed, gen_out);
        if (*run) return cmd_run(run_flags, trace);
        if (*bench) return cmd_bench(bench_flags, jobs);
        if (*report) return cmd_report(report_in);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}
