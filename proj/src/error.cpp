#include "u2f/error.hpp"

namespace u2f {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::UnknownStoryType: return "UnknownStoryType";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::MissingValidation: return "MissingValidation";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::MissingScript: return "MissingScript";
    case ErrorCode::EmptyStatement: return "EmptyStatement";
    case ErrorCode::MissingPotentialFix: return "MissingPotentialFix";
    case ErrorCode::AbstractionTooConcrete: return "AbstractionTooConcrete";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::NoAcceptedUUs: return "NoAcceptedUUs";
    case ErrorCode::UnaddressedConflict: return "UnaddressedConflict";
    case ErrorCode::IncompletePlan: return "IncompletePlan";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::TerminalState: return "TerminalState";
    case ErrorCode::TraceDivergence: return "TraceDivergence";
    case ErrorCode::EmbedderFailure: return "EmbedderFailure";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UnequalRaterCounts: return "UnequalRaterCounts";
    case ErrorCode::MissingRatings: return "MissingRatings";
    case ErrorCode::ExtractionFailed: return "ExtractionFailed";
    case ErrorCode::NarrativeLengthViolation: return "NarrativeLengthViolation";
    case ErrorCode::MismatchedTaskSets: return "MismatchedTaskSets";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Usage: return "Usage";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

Error Error::with_stage(std::string stage) const {
    Error copy(code_, "[" + stage + "] " + detail_);
    copy.detail_ = detail_;
    copy.stage_ = std::move(stage);
    return copy;
}

void fail(ErrorCode code, std::string detail) { throw Error(code, std::move(detail)); }

} // namespace u2f
