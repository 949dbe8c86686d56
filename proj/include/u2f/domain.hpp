#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "u2f/error.hpp"

namespace u2f {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class StoryType { Exploration, Architecture, Infrastructure, Compliance };
enum class DefectKind { ImplicitAssumption, ScopeLimitation, SideEffect };
enum class Strategy { Analogy, ReverseThinking };
enum class Severity { Normal, Critical };
/// The three assessment axes of external validation.
enum class Component { F, I, C };
enum class ImpactCategory { Architecture, TechnologyChoice, CapabilityPriority };

std::string to_string(StoryType v);
std::string to_string(DefectKind v);
std::string to_string(Strategy v);
std::string to_string(Severity v);
std::string to_string(Component v);
std::string to_string(ImpactCategory v);

/// Case-insensitive parsers; std::nullopt for unknown labels.
std::optional<StoryType> parse_story_type(std::string_view s);
std::optional<DefectKind> parse_defect_kind(std::string_view s);
std::optional<Strategy> parse_strategy(std::string_view s);
std::optional<Severity> parse_severity(std::string_view s);
std::optional<Component> parse_component(std::string_view s);
std::optional<ImpactCategory> parse_impact(std::string_view s);

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

struct EnablerStory {
    std::string id;
    std::string narrative;
    std::string expected_result;
    std::string actual_result;
    std::string potential_fix;
    StoryType story_type = StoryType::Exploration;
    int business_value = 1;
    int feasibility = 1;
    int impact = 1;
    /// Documented artifacts (backlog items, ADRs, acceptance criteria, risk
    /// register entries) that a UU must be absent from.
    std::vector<std::string> artifact_corpus;

    bool operator==(const EnablerStory&) const = default;
};

struct Defect {
    DefectKind kind = DefectKind::ImplicitAssumption;
    std::string description;
    bool operator==(const Defect&) const = default;
};

struct StrategicBrief {
    std::string problem_statement;
    std::string baseline_solution;
    std::vector<Defect> defect_analysis;
    std::vector<std::string> risks;
    /// Set when the defect stage explicitly answered "no defects found".
    bool defects_explicit_none = false;

    bool operator==(const StrategicBrief&) const = default;
};

struct EvidenceItem {
    std::string source;
    std::string snippet;
    Component supports = Component::F;
    std::string retrieved_at;

    bool operator==(const EvidenceItem&) const = default;
};

/// V = F + I + C. The total is derived, never stored independently.
class ValidationScore {
public:
    ValidationScore() = default;

    /// Throws InvalidValue when a component lies outside [0, 1].
    static ValidationScore from_components(double f, double i, double c,
                                           std::array<bool, 3> no_evidence = {false, false, false});

    [[nodiscard]] double feasibility() const { return f_; }
    [[nodiscard]] double implementation() const { return i_; }
    [[nodiscard]] double context() const { return c_; }
    [[nodiscard]] double total() const { return f_ + i_ + c_; }
    [[nodiscard]] double component(Component c) const;
    /// True when the component was scored on the no-evidence path.
    [[nodiscard]] bool no_evidence(Component c) const { return no_evidence_[static_cast<int>(c)]; }

    bool operator==(const ValidationScore&) const = default;

private:
    double f_ = 0.0;
    double i_ = 0.0;
    double c_ = 0.0;
    std::array<bool, 3> no_evidence_{false, false, false};
};

/// Outcome of the four-condition UU test. accepted() is the conjunction of
/// the flags, so the two can never disagree.
struct FilterVerdict {
    bool evidence_absence = false;
    bool discovery_triggering = false;
    bool solution_space_impact = false;
    bool non_triviality = false;
    std::vector<std::string> rejection_reasons;

    [[nodiscard]] bool accepted() const {
        return evidence_absence && discovery_triggering && solution_space_impact && non_triviality;
    }
    bool operator==(const FilterVerdict&) const = default;
};

struct UURecord {
    std::string id;
    std::string name;
    std::string overview;
    std::string overlooked_reason;
    std::vector<EvidenceItem> evidence;
    std::optional<Strategy> strategy;
    std::optional<ValidationScore> validation;
    Severity severity = Severity::Normal;
    std::set<ImpactCategory> impacts;
    /// Clause of the problem statement this UU invalidates (Critical only).
    std::string invalidated_clause;
    /// Names or ids of other candidates this one conflicts with, with reasons.
    std::vector<std::string> conflicts_with;
    std::optional<FilterVerdict> filter_verdict;

    bool operator==(const UURecord&) const = default;
};

struct Advantage {
    std::string dimension;
    std::string claim;
    bool operator==(const Advantage&) const = default;
};

struct Plan {
    std::vector<std::string> toolchain;
    std::vector<std::string> phases;
    std::vector<std::string> risks;
    bool operator==(const Plan&) const = default;
};

struct IntegratedSolution {
    std::string overview;
    std::vector<Advantage> comparative_analysis;
    /// Declared "parity": an empty advantage list that the agent asserted.
    bool parity = false;
    Plan implementation_plan;

    /// Names of the missing parts; empty when the deliverable is complete.
    [[nodiscard]] std::vector<std::string> missing_parts() const;
    [[nodiscard]] bool complete() const { return missing_parts().empty(); }
    bool operator==(const IntegratedSolution&) const = default;
};

struct FilterConfig {
    /// Jaccard overlap at or above which an artifact "documents" the UU.
    double overlap_threshold = 0.6;
    /// Minimum V = F + I + C for non-triviality.
    double min_total_v = 1.8;
    bool operator==(const FilterConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct FieldIssue {
    ErrorCode code;
    std::string field;
    std::string message;
};

/// Thrown by validate_enabler_story; code() is the first issue's code and
/// issues() lists all of them.
class StoryValidationError : public Error {
public:
    explicit StoryValidationError(std::vector<FieldIssue> issues);
    [[nodiscard]] const std::vector<FieldIssue>& issues() const { return issues_; }

private:
    std::vector<FieldIssue> issues_;
};

/// Validates a raw ingestion record. Never repairs scores; every violated
/// constraint is reported.
EnablerStory validate_enabler_story(const Json& raw);

/// Applies the operational four-condition UU definition.
FilterVerdict apply_uu_filter(const UURecord& candidate, const EnablerStory& story,
                              const FilterConfig& config = {});

/// True when an artifact text documents the overview: verbatim containment
/// (after word canonicalisation) or Jaccard overlap >= threshold.
bool artifact_documents(std::string_view artifact, std::string_view overview, double threshold);

// ---------------------------------------------------------------------------
// Canonical JSON
// ---------------------------------------------------------------------------

void to_json(Json& j, const EnablerStory& v);
/// Same contract as validate_enabler_story.
void from_json(const Json& j, EnablerStory& v);
void to_json(Json& j, const Defect& v);
void from_json(const Json& j, Defect& v);
void to_json(Json& j, const StrategicBrief& v);
void from_json(const Json& j, StrategicBrief& v);
void to_json(Json& j, const EvidenceItem& v);
void from_json(const Json& j, EvidenceItem& v);
void to_json(Json& j, const ValidationScore& v);
void from_json(const Json& j, ValidationScore& v);
void to_json(Json& j, const FilterVerdict& v);
void from_json(const Json& j, FilterVerdict& v);
void to_json(Json& j, const UURecord& v);
void from_json(const Json& j, UURecord& v);
void to_json(Json& j, const Advantage& v);
void from_json(const Json& j, Advantage& v);
void to_json(Json& j, const Plan& v);
void from_json(const Json& j, Plan& v);
void to_json(Json& j, const IntegratedSolution& v);
void from_json(const Json& j, IntegratedSolution& v);

/// Reads a JSON-Lines file of stories, validating each line.
std::vector<EnablerStory> read_story_file(const std::string& path);
void write_story_file(const std::string& path, const std::vector<EnablerStory>& stories);

} // namespace u2f
