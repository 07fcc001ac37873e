#pragma once

#include "steam_mapf/observation.hpp"
#include "steam_mapf/policy.hpp"

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <sys/types.h>

namespace steam_mapf {

/// One request line: {"step": t, "observations": [{"window", "obstacle",
/// "agents", "cost", "action_order"}, ...]}. Channels are row-major; +inf
/// costs are written as the string "inf".
std::string encode_policy_request(int step, std::span<const Observation> batch);

/// Parses {"logits": [[5 numbers], ...]}. Entries may also be the strings
/// "inf" / "-inf". Throws PolicyError(ProtocolViolation) on malformed input,
/// wrong arity, or a vector without any finite entry.
std::vector<LogitVector> decode_policy_reply(std::string_view line, std::size_t expected);

/// A policy living in a child process, spoken to with one JSON line per
/// simulation step over its stdin/stdout. One instance per episode.
class ExternalPolicy {
public:
    ExternalPolicy(const std::vector<std::string>& argv, std::chrono::milliseconds timeout);
    ~ExternalPolicy();

    ExternalPolicy(const ExternalPolicy&) = delete;
    ExternalPolicy& operator=(const ExternalPolicy&) = delete;

    /// Throws PolicyError: PolicyTimeout, ProcessExited or ProtocolViolation.
    std::vector<LogitVector> query(int step, std::span<const Observation> batch);

    pid_t pid() const { return pid_; }

private:
    void send_line(const std::string& line, std::chrono::steady_clock::time_point deadline);
    std::string read_line(std::chrono::steady_clock::time_point deadline);
    void shutdown();

    pid_t pid_ = -1;
    int fd_ = -1;
    std::chrono::milliseconds timeout_;
    std::string buffer_;
};

} // namespace steam_mapf
