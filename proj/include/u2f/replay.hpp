#pragma once

#include <optional>

#include "u2f/orchestrator.hpp"

namespace u2f {

/// TraceDivergence with the sequence number of the offending event.
class TraceDivergenceError : public Error {
public:
    TraceDivergenceError(long long seq, std::string detail)
        : Error(ErrorCode::TraceDivergence, "seq " + std::to_string(seq) + ": " + detail), seq_(seq) {}
    [[nodiscard]] long long seq() const { return seq_; }

private:
    long long seq_;
};

struct ReplayOptions {
    /// Re-run under a different configuration (e.g. search disabled); any
    /// resulting difference in external calls is a divergence.
    std::optional<RunConfig> config_override;
};

/// Checks gapless sequence numbers and per-event digests; throws
/// TraceDivergenceError at the first bad event.
void verify_trace_integrity(const RunTrace& trace);

/// Re-executes the pipeline with recorded provider and search responses
/// and human directives. Every provider request must equal the recorded one,
/// and every recorded external call must be consumed.
CaseResult replay(const RunTrace& trace, const ReplayOptions& options = {});

} // namespace u2f
