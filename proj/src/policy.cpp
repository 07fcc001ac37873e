#include "steam_mapf/policy.hpp"

#include "steam_mapf/error.hpp"

#include <algorithm>
#include <cmath>

namespace steam_mapf {

void PolicyConfig::validate() const {
    if (!(temperature > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "policy.temperature must be > 0");
    }
    if (!(blocked_logit >= 1e3)) {
        throw Error(ErrorCode::InvalidConfig, "policy.blocked_logit must be >= 1000");
    }
    if (!(occupied_penalty >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "policy.occupied_penalty must be >= 0");
    }
    if (kind == PolicyKind::External && command.empty()) {
        throw Error(ErrorCode::InvalidConfig, "policy.command is required for an external policy");
    }
    if (timeout_ms < 1) {
        throw Error(ErrorCode::InvalidConfig, "policy.timeout_ms must be positive");
    }
}

LogitVector greedy_logits(const Observation& obs, const PolicyConfig& cfg) {
    LogitVector logits{};
    for (Action a : kActions) {
        const auto k = static_cast<std::size_t>(a);
        if (a == Action::Wait) {
            logits[k] = 0.0;
            continue;
        }
        const Vertex d = offset(a);
        const double c = obs.cost.at(d.row, d.col);
        if (obs.obstacles.at(d.row, d.col) || !(c < kInfinity)) {
            logits[k] = -cfg.blocked_logit;
            continue;
        }
        logits[k] = -cfg.temperature * c;
        if (obs.agents.at(d.row, d.col)) {
            logits[k] -= cfg.occupied_penalty;
        }
    }
    return logits;
}

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Action select_action(const LogitVector& logits, const PolicyConfig& cfg, Rng& rng) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kActionCount; ++k) {
        if (logits[k] > logits[best]) {
            best = k;
        }
    }
    if (cfg.selection == Selection::Argmax) {
        return kActions[best];
    }
    std::array<double, kActionCount> weight{};
    double total = 0.0;
    for (std::size_t k = 0; k < kActionCount; ++k) {
        weight[k] = std::isfinite(logits[k]) ? std::exp(logits[k] - logits[best]) : 0.0;
        total += weight[k];
    }
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < kActionCount; ++k) {
        acc += weight[k];
        if (u < acc) {
            return kActions[k];
        }
    }
    return kActions[best];
}

} // namespace steam_mapf
