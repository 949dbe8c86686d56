#pragma once

#include <optional>
#include <string>
#include <vector>

#include "u2f/eval.hpp"
#include "u2f/orchestrator.hpp"

namespace u2f {

// ---------------------------------------------------------------------------
// Input degradation
// ---------------------------------------------------------------------------

enum class DegradationMode { Remove, Obscure, Mixed };
std::string to_string(DegradationMode m);
std::optional<DegradationMode> parse_degradation_mode(std::string_view s);

inline constexpr double kMinDegradation = 0.25;
inline constexpr double kMaxDegradation = 0.60;
inline constexpr std::string_view kRedactionMarker = "[REDACTED]";

/// Ratio is either 0 (control) or within [0.25, 0.60]; the constructor-style
/// factory rejects anything else.
struct DegradationSpec {
    double ratio = 0.0;
    DegradationMode mode = DegradationMode::Remove;
    std::uint64_t seed = 0;

    /// Throws InvalidValue for a ratio outside the band.
    static DegradationSpec make(double ratio, DegradationMode mode, std::uint64_t seed);
    [[nodiscard]] std::string label() const;
    bool operator==(const DegradationSpec&) const = default;
};

void to_json(Json& j, const DegradationSpec& s);
void from_json(const Json& j, DegradationSpec& s);

/// Sentence units of a story, in field order narrative, expected, actual,
/// fix.
struct SentenceRef {
    int field = 0;
    std::size_t index = 0;
};
std::vector<SentenceRef> sentence_units(const EnablerStory& story);

/// Indices (into sentence_units) degraded under a spec, in permutation
/// order. A prefix of one seeded permutation, so higher ratios strictly
/// extend lower ones.
std::vector<std::size_t> degraded_units(const EnablerStory& story, const DegradationSpec& spec);

/// Removes or redacts exactly ceil(ratio * N) of the story's N sentence
/// units; everything else is byte-identical, including id, type and scores.
EnablerStory degrade_input(const EnablerStory& story, const DegradationSpec& spec);

// ---------------------------------------------------------------------------
// Failure classification and suite
// ---------------------------------------------------------------------------

struct FailureClass {
    bool failed = false;
    std::vector<std::string> reasons;
};

FailureClass classify_failure(const CaseResult& result);

struct TierReport {
    DegradationSpec spec;
    int cases = 0;
    int failures = 0;
    double failure_rate = 0.0;
    /// Mean semantic novelty over successful cases.
    std::optional<double> semantic_novelty;
    double novelty_retention = 0.0;
    /// Set when retention could not be computed (no successful case, or a
    /// zero control mean); retention is then reported as 0.
    bool retention_undefined = false;
    std::optional<double> coherence;
    std::optional<double> relevance;
    std::vector<std::string> failed_cases;
};

struct RobustnessReport {
    std::vector<TierReport> tiers;
};

/// Runs every story under every tier. Ratings, when given, are matched by
/// case id and `run` = tier label. Requires a ratio-0 control tier.
RobustnessReport run_robustness_suite(const std::vector<EnablerStory>& stories,
                                      const std::vector<DegradationSpec>& tiers, const RunConfig& config,
                                      const RunServices& services, EmbeddingProvider& embedder,
                                      const std::vector<RatingRecord>& ratings = {}, int pool_size = 4);

std::string to_csv(const RobustnessReport& r);
std::string to_markdown(const RobustnessReport& r);

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

enum class AblationVariant { Full, NoSearch, NoExploration, NoIntegration, DiscoveryOnly };
std::string to_string(AblationVariant v);
std::optional<AblationVariant> parse_ablation_variant(std::string_view s);

/// `base` with only the variant's flags changed.
RunConfig ablation_config(AblationVariant variant, RunConfig base = {});

} // namespace u2f
