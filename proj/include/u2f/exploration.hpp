#pragma once

#include <optional>
#include <string>
#include <vector>

#include "u2f/domain.hpp"
#include "u2f/stage.hpp"

namespace u2f {

struct GeneralProblem {
    std::string abstraction;
    std::vector<std::string> invariant_structure;
    bool operator==(const GeneralProblem&) const = default;
};

/// Analogy source fields; anything else is "Other".
enum class SourceDomain { Biology, Psychology, Economics, Physics, Other };
SourceDomain classify_domain(std::string_view name);

struct AnalogyCandidate {
    std::string source_domain;  ///< Biology, Psychology, Economics, Physics or the free-text other field
    std::string source_mechanism;
    std::string mapped_solution;
    bool operator==(const AnalogyCandidate&) const = default;
};

/// Result of searching one field: a candidate or the explicit marker.
struct AnalogyOutcome {
    std::string domain;
    std::optional<AnalogyCandidate> candidate;
    [[nodiscard]] bool no_analogy() const { return !candidate.has_value(); }
    bool operator==(const AnalogyOutcome&) const = default;
};

struct PrerequisiteChain {
    std::string goal;
    /// Goal-adjacent first; the last element is the minimal prerequisite.
    std::vector<std::string> prerequisites;
    std::vector<std::string> pruned;
    [[nodiscard]] const std::string& minimal() const { return prerequisites.back(); }
    bool operator==(const PrerequisiteChain&) const = default;
};

enum class ExplorationControlKind { Continue, ResetToDiscovery, DeferToIntegration };
std::string to_string(ExplorationControlKind k);

struct ExplorationControl {
    ExplorationControlKind kind = ExplorationControlKind::Continue;
    /// The Critical UU for a reset; the conflicting UUs for a deferral.
    std::vector<std::string> uu_ids;
    std::string reason;
    bool operator==(const ExplorationControl&) const = default;
};

struct ExplorationReport {
    std::vector<UURecord> uus;       ///< accepted only
    std::vector<UURecord> rejected;  ///< with their verdicts
    ExplorationControl control;
    bool operator==(const ExplorationReport&) const = default;
};

void to_json(Json& j, const GeneralProblem& v);
void to_json(Json& j, const AnalogyOutcome& v);
void to_json(Json& j, const PrerequisiteChain& v);
void to_json(Json& j, const ExplorationControl& v);
void to_json(Json& j, const ExplorationReport& v);
void from_json(const Json& j, ExplorationControl& v);
void from_json(const Json& j, ExplorationReport& v);

/// Software terms an abstraction must not contain.
std::vector<std::string> abstraction_stopwords(const PromptLibrary& prompts);
/// Stopwords present in the text, in list order.
std::vector<std::string> concrete_terms(std::string_view abstraction, const std::vector<std::string>& stopwords);

GeneralProblem abstract_problem(const StrategicBrief& brief, const StageContext& ctx);

/// One outcome per requested domain, in the requested order. Runs the
/// domains concurrently when config.parallel_analogies is set; events are
/// merged into the trace in domain order either way.
std::vector<AnalogyOutcome> map_analogies(const GeneralProblem& gp, const std::vector<std::string>& domains,
                                          const StageContext& ctx);

/// Backward chain from the goal. Duplicate prerequisites are moved to pruned.
PrerequisiteChain reverse_chain(const std::string& goal, const StageContext& ctx);

/// Candidate UUs from both strategies, capped at config.max_candidates.
/// Critical severity is kept only when the quoted clause occurs in the
/// problem statement.
std::vector<UURecord> derive_candidates(const StrategicBrief& brief, const std::vector<AnalogyOutcome>& analogies,
                                        const PrerequisiteChain& chain, const StageContext& ctx);

struct CandidateValidation {
    ValidationScore score;
    std::vector<EvidenceItem> evidence;
};

/// Score anchors for the component rubric.
inline constexpr double kContradictedScore = 0.0;
inline constexpr double kNoEvidenceScore = 0.3;

/// F, I and C from searched evidence. Search failures and disabled search
/// take the no-evidence path (0.3, marker set); they never abort.
CandidateValidation validate_candidate(const UURecord& candidate, const StageContext& ctx);

/// Control signal for a set of accepted UUs.
ExplorationControl decide_control(const std::vector<UURecord>& accepted);

/// Whether a conflicts_with entry of `a` names `b`.
bool names_candidate(const UURecord& a, const UURecord& b);

ExplorationReport run_exploration(const EnablerStory& story, const StrategicBrief& brief, StageContext& ctx);

} // namespace u2f
