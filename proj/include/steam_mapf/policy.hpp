#pragma once

#include "steam_mapf/grid.hpp"
#include "steam_mapf/observation.hpp"

#include <array>
#include <chrono>
#include <random>
#include <string>
#include <vector>

namespace steam_mapf {

/// One preference score per action, indexed in canonical action order.
using LogitVector = std::array<double, kActionCount>;

constexpr LogitVector zero_logits() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }

enum class PolicyKind { GreedyFollower, External };
enum class Selection { Argmax, Sample };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::GreedyFollower;
    double temperature = 1.0;        // kappa
    double blocked_logit = 1e6;      // M
    double occupied_penalty = 2.0;   // nu
    Selection selection = Selection::Argmax;
    // External only: argv of the policy process and the per-step reply deadline.
    std::vector<std::string> command;
    int timeout_ms = 10000;

    /// Throws InvalidConfig on kappa <= 0, M < 1e3, nu < 0 or an external
    /// policy without a command.
    void validate() const;

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Shortest-path follower: logit(a) = -kappa * c(a) where c(a) is the
/// relative cost of the cell `a` leads to; blocked cells get -M and cells
/// held by another agent lose nu.
LogitVector greedy_logits(const Observation& obs, const PolicyConfig& cfg);

/// Deterministic generator used for stochastic action selection.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, identical on every
/// standard library.
double uniform01(Rng& rng);

/// Argmax with canonical tie-break, or a softmax draw.
Action select_action(const LogitVector& logits, const PolicyConfig& cfg, Rng& rng);

} // namespace steam_mapf
