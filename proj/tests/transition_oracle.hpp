#pragma once

#include <optional>

#include "u2f/orchestrator.hpp"

namespace u2f::testing {

/// Independent statement of the transition table.
inline std::optional<PipelineState> oracle(const PipelineState& s, SignalKind k, const RunConfig& c) {
    if (s.terminal()) return std::nullopt;
    PipelineState n = s;
    const bool e = c.stage_enabled(Phase::Exploration);
    const bool i = c.stage_enabled(Phase::Integration);
    auto fail_with = [&](const char* why) {
        n.phase = Phase::Failed;
        n.failure_reason = why;
        return n;
    };
    auto reset = [&] {
        if (s.reset_count >= c.max_resets) return fail_with("reset cap");
        n.reset_count++;
        n.phase = Phase::Discovery;
        return n;
    };
    if (k == SignalKind::Abort) return fail_with("aborted");
    if (s.phase == Phase::Discovery && k == SignalKind::Continue) {
        n.phase = e ? Phase::Exploration : i ? Phase::Integration : Phase::Done;
        return n;
    }
    if (s.phase == Phase::Exploration) {
        if (k == SignalKind::Continue || k == SignalKind::DeferToIntegration) {
            n.phase = i ? Phase::Integration : Phase::Done;
            return n;
        }
        if (k == SignalKind::ResetToDiscovery) return reset();
    }
    if (s.phase == Phase::Integration) {
        if (k == SignalKind::Done) {
            n.phase = Phase::Done;
            return n;
        }
        if (k == SignalKind::StrategicReset) return reset();
        if (k == SignalKind::DemandDeeperExploration) {
            if (!e) return fail_with("deeper exploration requested but exploration is disabled");
            if (s.deepen_count >= c.max_deepens) return fail_with("deepen cap");
            n.deepen_count++;
            n.phase = Phase::Exploration;
            return n;
        }
    }
    return std::nullopt;
}

} // namespace u2f::testing
