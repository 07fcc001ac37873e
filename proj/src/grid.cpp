#include "steam_mapf/grid.hpp"

#include "steam_mapf/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace steam_mapf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownCell: return "UnknownCell";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::StartOnObstacle: return "StartOnObstacle";
    case ErrorCode::GoalOnObstacle: return "GoalOnObstacle";
    case ErrorCode::DuplicateStart: return "DuplicateStart";
    case ErrorCode::DuplicateGoal: return "DuplicateGoal";
    case ErrorCode::GoalUnreachable: return "GoalUnreachable";
    case ErrorCode::TargetBlocked: return "TargetBlocked";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::CenterUnreachable: return "CenterUnreachable";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoConflict: return "NoConflict";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::PolicyTimeout: return "PolicyTimeout";
    case ErrorCode::ProcessExited: return "ProcessExited";
    case ErrorCode::SingleAgent: return "SingleAgent";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MixedConfig: return "MixedConfig";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

std::string to_string(Vertex v) {
    return "(" + std::to_string(v.row) + "," + std::to_string(v.col) + ")";
}

std::string_view to_string(Action a) {
    switch (a) {
    case Action::Wait: return "wait";
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
    }
    return "?";
}

GridMap::GridMap(int width, int height, std::vector<std::uint8_t> blocked)
    : width_(width), height_(height), blocked_(std::move(blocked)) {
    if (width < 1 || height < 1) {
        throw Error(ErrorCode::DimensionMismatch, "map dimensions must be positive");
    }
    if (blocked_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::DimensionMismatch, "blocked mask size does not match width*height");
    }
}

GridMap GridMap::empty(int width, int height) {
    return GridMap(width, height,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0));
}

GridMap GridMap::from_rows(std::span<const std::string> rows) {
    if (rows.empty()) {
        throw Error(ErrorCode::DimensionMismatch, "no rows");
    }
    const int width = static_cast<int>(rows.front().size());
    std::vector<std::uint8_t> blocked;
    blocked.reserve(rows.size() * rows.front().size());
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != width) {
            throw Error(ErrorCode::DimensionMismatch, "ragged fixture rows");
        }
        for (char c : row) {
            blocked.push_back(c == '.' ? 0 : 1);
        }
    }
    return GridMap(width, static_cast<int>(rows.size()), std::move(blocked));
}

std::size_t GridMap::free_count() const {
    return static_cast<std::size_t>(std::count(blocked_.begin(), blocked_.end(), std::uint8_t{0}));
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    return s;
}

int parse_dimension(std::string_view value, std::string_view key) {
    value = trim(value);
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || out < 1) {
        throw Error(ErrorCode::MalformedHeader, "bad " + std::string(key) + " value '" + std::string(value) + "'");
    }
    return out;
}

} // namespace

GridMap parse_map(std::istream& in) {
    int height = -1;
    int width = -1;
    bool saw_map = false;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view l = trim(line);
        if (l.empty()) {
            continue;
        }
        if (l == "map") {
            saw_map = true;
            break;
        }
        const auto space = l.find(' ');
        const std::string_view key = l.substr(0, space);
        const std::string_view value = space == std::string_view::npos ? std::string_view{} : l.substr(space + 1);
        if (key == "height") {
            height = parse_dimension(value, key);
        } else if (key == "width") {
            width = parse_dimension(value, key);
        } else if (key != "type") {
            throw Error(ErrorCode::MalformedHeader, "unexpected header line '" + std::string(l) + "'");
        }
    }
    if (!saw_map || height < 0 || width < 0) {
        throw Error(ErrorCode::MalformedHeader, "map header must provide height, width and a 'map' line");
    }

    std::vector<std::uint8_t> blocked;
    blocked.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    int rows = 0;
    while (std::getline(in, line)) {
        std::string_view l = line;
        while (!l.empty() && l.back() == '\r') {
            l.remove_suffix(1);
        }
        if (l.empty()) {
            continue;
        }
        if (rows == height) {
            throw Error(ErrorCode::DimensionMismatch, "more than " + std::to_string(height) + " map rows");
        }
        if (static_cast<int>(l.size()) != width) {
            throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(rows) + " has length " +
                                                          std::to_string(l.size()) + ", expected " +
                                                          std::to_string(width));
        }
        for (char c : l) {
            switch (c) {
            case '.':
            case 'G':
            case 'S': blocked.push_back(0); break;
            case '@':
            case 'O':
            case 'T':
            case 'W': blocked.push_back(1); break;
            default:
                throw Error(ErrorCode::UnknownCell, std::string("unknown map character '") + c + "' in row " +
                                                        std::to_string(rows));
            }
        }
        ++rows;
    }
    if (rows != height) {
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(height) + " rows, found " + std::to_string(rows));
    }
    return GridMap(width, height, std::move(blocked));
}

GridMap parse_map(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_map(in);
}

GridMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open map file '" + path + "'");
    }
    return parse_map(in);
}

std::string write_map(const GridMap& map) {
    std::string out = "type octile\nheight " + std::to_string(map.height()) + "\nwidth " +
                      std::to_string(map.width()) + "\nmap\n";
    out.reserve(out.size() + map.cell_count() + static_cast<std::size_t>(map.height()));
    for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c) {
            out.push_back(map.blocked({r, c}) ? '@' : '.');
        }
        out.push_back('\n');
    }
    return out;
}

Vertex next_vertex(const GridMap& map, Vertex v, Action a) {
    const Vertex n = step(v, a);
    return map.free(n) ? n : v;
}

std::vector<TransitionConflict> find_transition_conflicts(std::span<const Vertex> prev, std::span<const Vertex> next) {
    if (prev.size() != next.size()) {
        throw Error(ErrorCode::LengthMismatch, "prev has " + std::to_string(prev.size()) + " agents, next has " +
                                                   std::to_string(next.size()));
    }
    std::vector<TransitionConflict> out;

    std::unordered_map<Vertex, std::vector<std::size_t>> by_target;
    by_target.reserve(next.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
        by_target[next[i]].push_back(i);
    }
    for (const auto& [v, agents] : by_target) {
        for (std::size_t a = 0; a < agents.size(); ++a) {
            for (std::size_t b = a + 1; b < agents.size(); ++b) {
                out.push_back({std::min(agents[a], agents[b]), std::max(agents[a], agents[b]), ConflictKind::Vertex});
            }
        }
    }

    std::unordered_map<Vertex, std::size_t> by_origin;
    by_origin.reserve(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) {
        by_origin.emplace(prev[i], i);
    }
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (next[i] == prev[i]) {
            continue;
        }
        auto it = by_origin.find(next[i]);
        if (it == by_origin.end()) {
            continue;
        }
        const std::size_t j = it->second;
        if (j > i && next[j] == prev[i]) {
            out.push_back({i, j, ConflictKind::Swap});
        }
    }

    std::sort(out.begin(), out.end(), [](const TransitionConflict& a, const TransitionConflict& b) {
        return std::tie(a.i, a.j, a.kind) < std::tie(b.i, b.j, b.kind);
    });
    return out;
}

std::vector<int> component_labels(const GridMap& map) {
    std::vector<int> label(map.cell_count(), -1);
    int next_label = 0;
    std::queue<std::size_t> frontier;
    for (std::size_t seed = 0; seed < map.cell_count(); ++seed) {
        if (map.blocked_at(seed) || label[seed] >= 0) {
            continue;
        }
        label[seed] = next_label;
        frontier.push(seed);
        while (!frontier.empty()) {
            const Vertex v = map.vertex(frontier.front());
            frontier.pop();
            for (Action a : kActions) {
                if (a == Action::Wait) {
                    continue;
                }
                const Vertex n = step(v, a);
                if (!map.free(n)) {
                    continue;
                }
                const std::size_t ni = map.index(n);
                if (label[ni] < 0) {
                    label[ni] = next_label;
                    frontier.push(ni);
                }
            }
        }
        ++next_label;
    }
    return label;
}

} // namespace steam_mapf
