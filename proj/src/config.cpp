#include "steam_mapf/config.hpp"

#include "steam_mapf/error.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace steam_mapf {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

template <typename E>
struct EnumName {
    E value;
    std::string_view name;
};

constexpr EnumName<PolicyKind> kPolicyKinds[] = {{PolicyKind::GreedyFollower, "greedy"},
                                                 {PolicyKind::External, "external"}};
constexpr EnumName<Selection> kSelections[] = {{Selection::Argmax, "argmax"}, {Selection::Sample, "sample"}};
constexpr EnumName<RolloutWeights> kRollouts[] = {{RolloutWeights::Base, "base"},
                                                  {RolloutWeights::Effective, "effective"}};
constexpr EnumName<DistanceNorm> kNorms[] = {{DistanceNorm::Chebyshev, "chebyshev"},
                                             {DistanceNorm::Manhattan, "manhattan"}};
constexpr EnumName<Arms> kArms[] = {{Arms::Both, "both"}, {Arms::On, "on"}, {Arms::Off, "off"}};
constexpr EnumName<ReportFormat> kFormats[] = {{ReportFormat::Json, "json"}, {ReportFormat::Csv, "csv"}};
constexpr EnumName<MapFamily> kFamilies[] = {
    {MapFamily::Random, "random"}, {MapFamily::Maze, "maze"}, {MapFamily::Warehouse, "warehouse"}};

template <typename E, std::size_t N>
std::string_view name_of(const EnumName<E> (&table)[N], E value) {
    for (const auto& e : table) {
        if (e.value == value) {
            return e.name;
        }
    }
    return "?";
}

/// Reads the members of one JSON object, remembering which keys were used so
/// that leftovers can be reported as unknown fields.
class Fields {
public:
    Fields(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            invalid(where() + " must be an object");
        }
    }

    const nlohmann::json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void get(const std::string& key, double& out) {
        if (auto* v = find(key)) {
            if (!v->is_number()) invalid(at(key) + " must be a number");
            out = v->get<double>();
        }
    }
    void get(const std::string& key, int& out) {
        if (auto* v = find(key)) {
            if (!v->is_number_integer()) invalid(at(key) + " must be an integer");
            const auto x = v->get<long long>();
            if (x < INT32_MIN || x > INT32_MAX) invalid(at(key) + " is out of range");
            out = static_cast<int>(x);
        }
    }
    void get(const std::string& key, std::uint64_t& out) {
        if (auto* v = find(key)) {
            if (!v->is_number_unsigned()) invalid(at(key) + " must be a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void get(const std::string& key, bool& out) {
        if (auto* v = find(key)) {
            if (!v->is_boolean()) invalid(at(key) + " must be true or false");
            out = v->get<bool>();
        }
    }
    void get(const std::string& key, std::string& out) {
        if (auto* v = find(key)) {
            if (!v->is_string()) invalid(at(key) + " must be a string");
            out = v->get<std::string>();
        }
    }
    void get(const std::string& key, std::vector<std::string>& out) {
        if (auto* v = find(key)) {
            if (!v->is_array()) invalid(at(key) + " must be an array of strings");
            out.clear();
            for (const auto& s : *v) {
                if (!s.is_string()) invalid(at(key) + " must be an array of strings");
                out.push_back(s.get<std::string>());
            }
        }
    }
    template <typename E, std::size_t N>
    void get(const std::string& key, E& out, const EnumName<E> (&table)[N]) {
        if (auto* v = find(key)) {
            std::string options;
            for (const auto& e : table) {
                if (v->is_string() && v->get<std::string>() == e.name) {
                    out = e.value;
                    return;
                }
                options += options.empty() ? "" : ", ";
                options += e.name;
            }
            invalid(at(key) + " must be one of: " + options);
        }
    }

    void done() const {
        for (const auto& [key, unused] : obj_.items()) {
            if (!seen_.count(key)) {
                invalid("unknown field " + at(key));
            }
        }
    }

private:
    std::string where() const { return path_.empty() ? "configuration" : path_; }

    const nlohmann::json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

PolicyConfig parse_policy(const nlohmann::json& j) {
    PolicyConfig c;
    Fields f(j, "policy");
    f.get("kind", c.kind, kPolicyKinds);
    f.get("temperature", c.temperature);
    f.get("blocked_logit", c.blocked_logit);
    f.get("occupied_penalty", c.occupied_penalty);
    f.get("selection", c.selection, kSelections);
    f.get("command", c.command);
    f.get("timeout_ms", c.timeout_ms);
    f.done();
    return c;
}

SteamConfig parse_steam(const nlohmann::json& j) {
    SteamConfig c;
    Fields f(j, "steam");
    f.get("probe_penalty", c.probe_penalty);
    f.get("gamma_time", c.gamma_time);
    f.get("gamma_dist", c.gamma_dist);
    f.get("epsilon", c.epsilon);
    f.get("alpha", c.alpha);
    f.get("update_interval", c.update_interval);
    f.get("horizon_cap", c.horizon_cap);
    f.get("rollout_weights", c.rollout_weights, kRollouts);
    f.get("probing", c.probing);
    f.get("detect_swaps", c.detect_swaps);
    f.get("emergent_every_step", c.emergent_every_step);
    f.get("sigma_excludes_blocked", c.sigma_excludes_blocked);
    f.get("detour_floor", c.detour_floor);
    f.done();
    return c;
}

GenSpec parse_generator(const nlohmann::json& j) {
    Fields f(j, "scenario.generator");
    MapFamily family = MapFamily::Random;
    f.get("family", family, kFamilies);
    GenSpec g = GenSpec::defaults(family);
    f.get("width", g.width);
    f.get("height", g.height);
    f.get("obstacle_density", g.obstacle_density);
    f.get("agent_count", g.agent_count);
    f.done();
    return g;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

} // namespace

void EpisodeOptions::validate() const {
    policy.validate();
    if (steam) {
        steam->validate();
    }
    if (observation_radius < 1) invalid("observation_radius must be >= 1");
    if (density_radius < 0) invalid("density_radius must be >= 0");
}

void RunConfig::validate() const {
    if (scenario_files.empty() == !generator.has_value()) {
        invalid("scenario: exactly one of files or generator must be given");
    }
    if (generator) {
        GenSpec probe = *generator;
        probe.validate();
    }
    if (episodes < 1) invalid("episodes must be >= 1");
    if (max_steps && *max_steps < 1) invalid("max_steps must be >= 1");
    episode_options(true).validate();
}

EpisodeOptions RunConfig::episode_options(bool steam_on) const {
    EpisodeOptions o;
    o.policy = policy;
    if (steam_on) {
        o.steam = steam;
    }
    o.observation_radius = observation_radius;
    o.density_radius = density_radius;
    o.density_norm = density_norm;
    return o;
}

Json to_json(const PolicyConfig& c) {
    Json j;
    j["kind"] = name_of(kPolicyKinds, c.kind);
    j["temperature"] = c.temperature;
    j["blocked_logit"] = c.blocked_logit;
    j["occupied_penalty"] = c.occupied_penalty;
    j["selection"] = name_of(kSelections, c.selection);
    j["command"] = c.command;
    j["timeout_ms"] = c.timeout_ms;
    return j;
}

Json to_json(const SteamConfig& c) {
    Json j;
    j["probe_penalty"] = c.probe_penalty;
    j["gamma_time"] = c.gamma_time;
    j["gamma_dist"] = c.gamma_dist;
    j["epsilon"] = c.epsilon;
    j["alpha"] = c.alpha;
    j["update_interval"] = c.update_interval;
    j["horizon_cap"] = c.horizon_cap;
    j["rollout_weights"] = name_of(kRollouts, c.rollout_weights);
    j["probing"] = c.probing;
    j["detect_swaps"] = c.detect_swaps;
    j["emergent_every_step"] = c.emergent_every_step;
    j["sigma_excludes_blocked"] = c.sigma_excludes_blocked;
    j["detour_floor"] = c.detour_floor;
    return j;
}

Json to_json(const GenSpec& g) {
    Json j;
    j["family"] = name_of(kFamilies, g.family);
    j["width"] = g.width;
    j["height"] = g.height;
    j["obstacle_density"] = g.obstacle_density;
    j["agent_count"] = g.agent_count;
    j["seed"] = g.seed;
    return j;
}

Json to_json(const RunConfig& c) {
    Json scenario;
    scenario["files"] = c.scenario_files;
    if (c.generator) {
        Json g = to_json(*c.generator);
        g.erase("seed");
        scenario["generator"] = std::move(g);
    } else {
        scenario["generator"] = nullptr;
    }
    Json j;
    j["scenario"] = std::move(scenario);
    j["policy"] = to_json(c.policy);
    j["steam"] = to_json(c.steam);
    j["arms"] = name_of(kArms, c.arms);
    j["episodes"] = c.episodes;
    j["seed"] = c.seed;
    j["max_steps"] = c.max_steps ? Json(*c.max_steps) : Json(nullptr);
    j["observation_radius"] = c.observation_radius;
    j["density_radius"] = c.density_radius;
    j["density_norm"] = name_of(kNorms, c.density_norm);
    j["output"] = c.output;
    j["format"] = name_of(kFormats, c.format);
    return j;
}

RunConfig parse_run_config(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte);
        invalid("configuration is not valid JSON at line " + std::to_string(line) + ", column " +
                std::to_string(column));
    }
    RunConfig c;
    Fields f(j, "");
    if (auto* s = f.find("scenario")) {
        Fields sf(*s, "scenario");
        sf.get("files", c.scenario_files);
        if (auto* g = sf.find("generator"); g && !g->is_null()) {
            c.generator = parse_generator(*g);
        }
        sf.done();
    }
    if (auto* p = f.find("policy")) {
        c.policy = parse_policy(*p);
    }
    if (auto* s = f.find("steam")) {
        c.steam = parse_steam(*s);
    }
    f.get("arms", c.arms, kArms);
    f.get("episodes", c.episodes);
    f.get("seed", c.seed);
    if (auto* m = f.find("max_steps"); m && !m->is_null()) {
        if (!m->is_number_integer()) invalid("max_steps must be an integer or null");
        c.max_steps = m->get<int>();
    }
    f.get("observation_radius", c.observation_radius);
    f.get("density_radius", c.density_radius);
    f.get("density_norm", c.density_norm, kNorms);
    f.get("output", c.output);
    f.get("format", c.format, kFormats);
    f.done();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open configuration file " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

std::string serialize_run_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t config_hash(const EpisodeOptions& options, int max_steps) {
    Json j;
    j["policy"] = to_json(options.policy);
    j["steam"] = options.steam ? to_json(*options.steam) : Json(nullptr);
    j["observation_radius"] = options.observation_radius;
    j["density_radius"] = options.density_radius;
    j["density_norm"] = name_of(kNorms, options.density_norm);
    j["max_steps"] = max_steps;
    j["arbitration"] = "lowest-index";
    return fnv1a64(j.dump());
}

std::string_view to_string(DistanceNorm n) { return name_of(kNorms, n); }
std::string_view to_string(Arms a) { return name_of(kArms, a); }
std::string_view to_string(ReportFormat f) { return name_of(kFormats, f); }

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

} // namespace steam_mapf
