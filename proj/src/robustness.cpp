#include "u2f/robustness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "u2f/text.hpp"

namespace u2f {

namespace {

constexpr std::array<std::pair<DegradationMode, const char*>, 3> kModes{{
    {DegradationMode::Remove, "Remove"},
    {DegradationMode::Obscure, "Obscure"},
    {DegradationMode::Mixed, "Mixed"},
}};

constexpr std::array<std::pair<AblationVariant, const char*>, 5> kVariants{{
    {AblationVariant::Full, "Full"},
    {AblationVariant::NoSearch, "NoSearch"},
    {AblationVariant::NoExploration, "NoExploration"},
    {AblationVariant::NoIntegration, "NoIntegration"},
    {AblationVariant::DiscoveryOnly, "DiscoveryOnly"},
}};

std::array<const std::string*, 4> fields(const EnablerStory& s) {
    return {&s.narrative, &s.expected_result, &s.actual_result, &s.potential_fix};
}

std::array<std::string*, 4> fields(EnablerStory& s) {
    return {&s.narrative, &s.expected_result, &s.actual_result, &s.potential_fix};
}

std::uint64_t story_seed(const EnablerStory& story, std::uint64_t seed) {
    return text::fnv1a64(story.id) ^ (seed * 0x9E3779B97F4A7C15ULL);
}

/// Whether a Mixed-mode unit is redacted rather than removed; fixed per unit
/// so nesting holds across ratios.
bool obscure_unit(const EnablerStory& story, const DegradationSpec& spec, std::size_t unit) {
    switch (spec.mode) {
    case DegradationMode::Remove: return false;
    case DegradationMode::Obscure: return true;
    case DegradationMode::Mixed: break;
    }
    text::SplitMix64 rng(story_seed(story, spec.seed) ^ ((unit + 1) * 0xD6E8FEB86659FD93ULL));
    return (rng.next() & 1U) != 0;
}

std::string fmt(double v, int precision) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string opt(const std::optional<double>& v, int precision = 2) { return v ? fmt(*v, precision) : ""; }

std::optional<double> mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

} // namespace

std::string to_string(DegradationMode m) {
    for (const auto& [v, n] : kModes) {
        if (v == m) return n;
    }
    return "?";
}

std::optional<DegradationMode> parse_degradation_mode(std::string_view s) {
    const auto l = text::to_lower(text::trim(s));
    for (const auto& [v, n] : kModes) {
        if (l == text::to_lower(n)) return v;
    }
    return std::nullopt;
}

DegradationSpec DegradationSpec::make(double ratio, DegradationMode mode, std::uint64_t seed) {
    if (!(ratio == 0.0 || (ratio >= kMinDegradation && ratio <= kMaxDegradation))) {
        fail(ErrorCode::InvalidValue, "degradation ratio " + fmt(ratio, 3) + " outside [0.25, 0.60] and not 0");
    }
    return {ratio, mode, seed};
}

std::string DegradationSpec::label() const {
    if (ratio == 0.0) return "control";
    return text::to_lower(to_string(mode)) + "@" + fmt(ratio, 2);
}

void to_json(Json& j, const DegradationSpec& s) {
    j = Json{{"ratio", s.ratio}, {"mode", to_string(s.mode)}, {"seed", s.seed}};
}

void from_json(const Json& j, DegradationSpec& s) {
    const auto mode = parse_degradation_mode(j.value("mode", std::string("Remove")));
    if (!mode) fail(ErrorCode::InvalidValue, "unknown degradation mode " + j.at("mode").dump());
    s = DegradationSpec::make(j.at("ratio").get<double>(), *mode, j.value("seed", std::uint64_t{0}));
}

std::vector<SentenceRef> sentence_units(const EnablerStory& story) {
    std::vector<SentenceRef> out;
    const auto fs = fields(story);
    for (int f = 0; f < 4; ++f) {
        const auto units = text::split_sentences(*fs[f]);
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (!text::trim(units[i].body).empty()) out.push_back({f, i});
        }
    }
    return out;
}

std::vector<std::size_t> degraded_units(const EnablerStory& story, const DegradationSpec& spec) {
    const std::size_t n = sentence_units(story).size();
    // ceil with a tolerance: 0.3 * 10 is 3.0000000000000004 in binary.
    const auto k = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(spec.ratio * n - 1e-9)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    text::SplitMix64 rng(story_seed(story, spec.seed));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    perm.resize(k);
    return perm;
}

EnablerStory degrade_input(const EnablerStory& story, const DegradationSpec& spec) {
    if (spec.ratio == 0.0) return story;
    const auto units = sentence_units(story);
    const auto chosen = degraded_units(story, spec);
    // (field, sentence index) -> obscure?
    std::map<std::pair<int, std::size_t>, bool> action;
    for (auto u : chosen) action[{units[u].field, units[u].index}] = obscure_unit(story, spec, u);

    EnablerStory out = story;
    const auto src = fields(story);
    const auto dst = fields(out);
    for (int f = 0; f < 4; ++f) {
        const auto parts = text::split_sentences(*src[f]);
        std::string rebuilt;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            auto it = action.find({f, i});
            if (it == action.end()) {
                rebuilt += parts[i].body + parts[i].trailing;
            } else if (it->second) {
                rebuilt += std::string(kRedactionMarker) + parts[i].trailing;
            }
        }
        *dst[f] = rebuilt;
    }
    return out;
}

FailureClass classify_failure(const CaseResult& r) {
    FailureClass out;
    if (r.status == Phase::Failed) {
        out.reasons.push_back("pipeline failed: " + (r.failure_reason.empty() ? "unknown" : r.failure_reason));
        if (r.error && r.error->value("code", std::string{}) == "SchemaViolation") {
            out.reasons.emplace_back("structured output unrecoverable");
        }
    } else if (r.status != Phase::Done) {
        out.reasons.push_back("not terminal: " + to_string(r.status));
    } else if (r.deliverable == "IntegratedSolution") {
        if (!r.solution) {
            out.reasons.emplace_back("incomplete deliverable: no solution");
        } else if (!r.solution->complete()) {
            out.reasons.push_back("incomplete deliverable: missing " + text::join(r.solution->missing_parts(), ", "));
        }
    } else if (r.deliverable == "BaselineSolution") {
        if (text::trim(r.baseline_output).empty()) out.reasons.emplace_back("incomplete deliverable: empty output");
    } else if (r.deliverable == "BriefAndUUs" || r.deliverable == "StrategicBrief") {
        if (!r.brief || text::trim(r.brief->problem_statement).empty()) {
            out.reasons.emplace_back("incomplete deliverable: no strategic brief");
        }
    } else {
        out.reasons.emplace_back("incomplete deliverable: none produced");
    }
    out.failed = !out.reasons.empty();
    return out;
}

RobustnessReport run_robustness_suite(const std::vector<EnablerStory>& stories,
                                      const std::vector<DegradationSpec>& tiers, const RunConfig& config,
                                      const RunServices& services, EmbeddingProvider& embedder,
                                      const std::vector<RatingRecord>& ratings, int pool_size) {
    const auto control = std::find_if(tiers.begin(), tiers.end(), [](const auto& t) { return t.ratio == 0.0; });
    if (control == tiers.end()) fail(ErrorCode::InvalidValue, "robustness tiers need a ratio-0 control");

    struct Slot {
        std::optional<CaseResult> result;
        std::string error;
    };
    const std::size_t per_tier = stories.size();
    std::vector<Slot> slots(tiers.size() * per_tier);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < slots.size(); i = next++) {
            const auto& spec = tiers[i / per_tier];
            const auto& story = stories[i % per_tier];
            try {
                slots[i].result = run_case(degrade_input(story, spec), config, services).result;
            } catch (const Error& e) {
                slots[i].error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(pool_size, static_cast<int>(slots.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    RobustnessReport report;
    for (std::size_t t = 0; t < tiers.size(); ++t) {
        TierReport tier;
        tier.spec = tiers[t];
        std::vector<double> novelty, coherence, relevance;
        for (std::size_t s = 0; s < per_tier; ++s) {
            const auto& slot = slots[t * per_tier + s];
            ++tier.cases;
            const bool failed = !slot.result || classify_failure(*slot.result).failed;
            if (failed) {
                ++tier.failures;
                tier.failed_cases.push_back(stories[s].id);
                continue;
            }
            // Novelty is measured against the undegraded initial solution.
            const auto produced = solution_text(*slot.result);
            if (!text::trim(produced).empty() && !text::trim(stories[s].potential_fix).empty()) {
                novelty.push_back(semantic_novelty(produced, stories[s].potential_fix, embedder));
            }
            for (const auto& r : ratings) {
                if (r.case_id != stories[s].id || r.run != tier.spec.label()) continue;
                if (r.coherence) coherence.push_back(*r.coherence);
                if (r.relevance) relevance.push_back(*r.relevance);
            }
        }
        tier.failure_rate = tier.cases == 0 ? 0.0 : static_cast<double>(tier.failures) / tier.cases;
        tier.semantic_novelty = mean_of(novelty);
        tier.coherence = mean_of(coherence);
        tier.relevance = mean_of(relevance);
        report.tiers.push_back(tier);
    }

    const auto& base = report.tiers[static_cast<std::size_t>(control - tiers.begin())];
    for (auto& tier : report.tiers) {
        if (tier.spec.ratio == 0.0 && tier.semantic_novelty) {
            tier.novelty_retention = 1.0;
        } else if (tier.semantic_novelty && base.semantic_novelty && *base.semantic_novelty > 0.0) {
            tier.novelty_retention = *tier.semantic_novelty / *base.semantic_novelty;
        } else {
            tier.novelty_retention = 0.0;
            tier.retention_undefined = true;
        }
    }
    return report;
}

std::string to_csv(const RobustnessReport& r) {
    std::ostringstream os;
    os << "tier,ratio,mode,seed,cases,failures,failure_rate,semantic_novelty,novelty_retention,retention_undefined,"
          "logical_coherence,relevance\n";
    for (const auto& t : r.tiers) {
        os << t.spec.label() << "," << fmt(t.spec.ratio, 2) << "," << to_string(t.spec.mode) << "," << t.spec.seed
           << "," << t.cases << "," << t.failures << "," << fmt(t.failure_rate, 4) << ","
           << opt(t.semantic_novelty, 4) << "," << fmt(t.novelty_retention, 4) << ","
           << (t.retention_undefined ? "true" : "false") << "," << opt(t.coherence) << "," << opt(t.relevance) << "\n";
    }
    return os.str();
}

std::string to_markdown(const RobustnessReport& r) {
    std::ostringstream os;
    os << "| Tier | Information loss | Failure rate | Logical coherence | Relevance | Novelty retention |\n"
       << "|---|---|---|---|---|---|\n";
    for (const auto& t : r.tiers) {
        os << "| " << t.spec.label() << " | " << fmt(t.spec.ratio * 100.0, 0) << "% | "
           << fmt(t.failure_rate * 100.0, 1) << "% | " << (t.coherence ? fmt(*t.coherence, 2) : "n/a") << " | "
           << (t.relevance ? fmt(*t.relevance, 2) : "n/a") << " | "
           << (t.retention_undefined ? "0.0% (undefined)" : fmt(t.novelty_retention * 100.0, 1) + "%") << " |\n";
    }
    return os.str();
}

std::string to_string(AblationVariant v) {
    for (const auto& [x, n] : kVariants) {
        if (x == v) return n;
    }
    return "?";
}

std::optional<AblationVariant> parse_ablation_variant(std::string_view s) {
    const auto l = text::to_lower(text::trim(s));
    for (const auto& [x, n] : kVariants) {
        if (l == text::to_lower(n)) return x;
    }
    return std::nullopt;
}

RunConfig ablation_config(AblationVariant variant, RunConfig base) {
    base.variant = to_string(variant);
    switch (variant) {
    case AblationVariant::Full: break;
    case AblationVariant::NoSearch: base.search_enabled = false; break;
    case AblationVariant::NoExploration: base.enabled_stages.erase(Phase::Exploration); break;
    case AblationVariant::NoIntegration: base.enabled_stages.erase(Phase::Integration); break;
    case AblationVariant::DiscoveryOnly:
        base.enabled_stages.erase(Phase::Exploration);
        base.enabled_stages.erase(Phase::Integration);
        break;
    }
    return base;
}

} // namespace u2f
