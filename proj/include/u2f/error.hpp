#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace u2f {

/// Every failure the library reports carries one of these codes so callers
/// (CLI exit codes, trace Error events, failure classification) can branch on
/// the kind without parsing messages.
enum class ErrorCode {
    // core-domain
    MissingField,
    ScoreOutOfRange,
    UnknownStoryType,
    InvalidValue,
    MissingValidation,
    // llm-gateway
    Timeout,
    RateLimited,
    ProviderError,
    SchemaViolation,
    MissingScript,
    // agents
    EmptyStatement,
    MissingPotentialFix,
    AbstractionTooConcrete,
    EmptyChain,
    NoAcceptedUUs,
    UnaddressedConflict,
    IncompletePlan,
    // search
    ProviderUnavailable,
    QuotaExceeded,
    // orchestrator
    IllegalTransition,
    TerminalState,
    TraceDivergence,
    // evaluation
    EmbedderFailure,
    DegenerateInput,
    UnequalRaterCounts,
    MissingRatings,
    // dataset
    ExtractionFailed,
    NarrativeLengthViolation,
    MismatchedTaskSets,
    // misc
    IoError,
    Usage,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

    /// Stage name attached when the error crossed an agent stage boundary.
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    Error with_stage(std::string stage) const;

private:
    ErrorCode code_;
    std::string detail_;
    std::string stage_;
};

[[noreturn]] void fail(ErrorCode code, std::string detail);

} // namespace u2f
