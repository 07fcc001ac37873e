#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace steam_mapf {

enum class ErrorCode {
    // map parsing
    MalformedHeader,
    DimensionMismatch,
    UnknownCell,
    // scenario validation
    OutOfBounds,
    StartOnObstacle,
    GoalOnObstacle,
    DuplicateStart,
    DuplicateGoal,
    GoalUnreachable,
    // search
    TargetBlocked,
    Unreachable,
    CenterUnreachable,
    LengthMismatch,
    NoConflict,
    // external policy
    ProtocolViolation,
    PolicyTimeout,
    ProcessExited,
    // reporting / config
    SingleAgent,
    EmptyInput,
    MixedConfig,
    Infeasible,
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Base exception for the library. Carries a machine-readable code and, where
/// the failure is attributable to one agent, that agent's index.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> agent = std::nullopt)
        : std::runtime_error(message), code_(code), agent_(agent) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> agent() const noexcept { return agent_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> agent_;
};

/// Raised by the external policy channel. Episodes that hit one of these are
/// reported as infrastructure failures rather than MAPF failures.
class PolicyError : public Error {
public:
    using Error::Error;
};

} // namespace steam_mapf
