#include "u2f/domain.hpp"

#include <fstream>
#include <sstream>

#include "u2f/text.hpp"

namespace u2f {

namespace {

template <typename E, std::size_t N>
std::optional<E> parse_label(std::string_view s, const std::array<std::pair<E, const char*>, N>& table) {
    const std::string key = text::to_lower(text::trim(s));
    for (const auto& [value, label] : table) {
        if (key == text::to_lower(label)) return value;
    }
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string label_of(E v, const std::array<std::pair<E, const char*>, N>& table) {
    for (const auto& [value, label] : table) {
        if (value == v) return label;
    }
    return "?";
}

constexpr std::array<std::pair<StoryType, const char*>, 4> kStoryTypes{{
    {StoryType::Exploration, "Exploration"},
    {StoryType::Architecture, "Architecture"},
    {StoryType::Infrastructure, "Infrastructure"},
    {StoryType::Compliance, "Compliance"},
}};
constexpr std::array<std::pair<DefectKind, const char*>, 3> kDefectKinds{{
    {DefectKind::ImplicitAssumption, "ImplicitAssumption"},
    {DefectKind::ScopeLimitation, "ScopeLimitation"},
    {DefectKind::SideEffect, "SideEffect"},
}};
constexpr std::array<std::pair<Strategy, const char*>, 2> kStrategies{{
    {Strategy::Analogy, "Analogy"},
    {Strategy::ReverseThinking, "ReverseThinking"},
}};
constexpr std::array<std::pair<Severity, const char*>, 2> kSeverities{{
    {Severity::Normal, "Normal"},
    {Severity::Critical, "Critical"},
}};
constexpr std::array<std::pair<Component, const char*>, 3> kComponents{{
    {Component::F, "F"},
    {Component::I, "I"},
    {Component::C, "C"},
}};
constexpr std::array<std::pair<ImpactCategory, const char*>, 3> kImpacts{{
    {ImpactCategory::Architecture, "Architecture"},
    {ImpactCategory::TechnologyChoice, "TechnologyChoice"},
    {ImpactCategory::CapabilityPriority, "CapabilityPriority"},
}};

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorCode::MissingField, key);
    return j.at(key).get<T>();
}

template <typename E, typename Parser>
E required_enum(const Json& j, const char* key, Parser parse) {
    const auto label = required<std::string>(j, key);
    auto v = parse(label);
    if (!v) fail(ErrorCode::InvalidValue, std::string(key) + "=" + label);
    return *v;
}

} // namespace

std::string to_string(StoryType v) { return label_of(v, kStoryTypes); }
std::string to_string(DefectKind v) { return label_of(v, kDefectKinds); }
std::string to_string(Strategy v) { return label_of(v, kStrategies); }
std::string to_string(Severity v) { return label_of(v, kSeverities); }
std::string to_string(Component v) { return label_of(v, kComponents); }
std::string to_string(ImpactCategory v) { return label_of(v, kImpacts); }

std::optional<StoryType> parse_story_type(std::string_view s) { return parse_label(s, kStoryTypes); }
std::optional<DefectKind> parse_defect_kind(std::string_view s) { return parse_label(s, kDefectKinds); }
std::optional<Strategy> parse_strategy(std::string_view s) { return parse_label(s, kStrategies); }
std::optional<Severity> parse_severity(std::string_view s) { return parse_label(s, kSeverities); }
std::optional<Component> parse_component(std::string_view s) { return parse_label(s, kComponents); }
std::optional<ImpactCategory> parse_impact(std::string_view s) { return parse_label(s, kImpacts); }

// --- ValidationScore --------------------------------------------------------

ValidationScore ValidationScore::from_components(double f, double i, double c, std::array<bool, 3> no_evidence) {
    for (double v : {f, i, c}) {
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidValue, "validation component out of [0,1]: " + std::to_string(v));
    }
    ValidationScore s;
    s.f_ = f;
    s.i_ = i;
    s.c_ = c;
    s.no_evidence_ = no_evidence;
    return s;
}

double ValidationScore::component(Component c) const {
    switch (c) {
    case Component::F: return f_;
    case Component::I: return i_;
    case Component::C: return c_;
    }
    return 0.0;
}

std::vector<std::string> IntegratedSolution::missing_parts() const {
    std::vector<std::string> missing;
    if (text::trim(overview).empty()) missing.emplace_back("overview");
    if (comparative_analysis.empty() && !parity) missing.emplace_back("comparative_analysis");
    const auto& p = implementation_plan;
    if (p.toolchain.empty() || p.phases.empty() || p.risks.empty()) missing.emplace_back("implementation_plan");
    return missing;
}

// --- validation --------------------------------------------------------------

StoryValidationError::StoryValidationError(std::vector<FieldIssue> issues)
    : Error(issues.empty() ? ErrorCode::InvalidValue : issues.front().code,
            [&] {
                std::string msg;
                for (const auto& i : issues) {
                    if (!msg.empty()) msg += "; ";
                    msg += std::string(to_string(i.code)) + "(" + i.field + (i.message.empty() ? "" : ", " + i.message) + ")";
                }
                return msg;
            }()),
      issues_(std::move(issues)) {}

EnablerStory validate_enabler_story(const Json& raw) {
    std::vector<FieldIssue> issues;
    if (!raw.is_object()) {
        throw StoryValidationError({{ErrorCode::InvalidValue, "<record>", "not a JSON object"}});
    }
    EnablerStory s;
    auto text_field = [&](const char* key, std::string& out, bool must_be_nonempty) {
        if (!raw.contains(key) || raw.at(key).is_null()) {
            issues.push_back({ErrorCode::MissingField, key, ""});
            return;
        }
        if (!raw.at(key).is_string()) {
            issues.push_back({ErrorCode::InvalidValue, key, "expected string"});
            return;
        }
        out = raw.at(key).get<std::string>();
        if (must_be_nonempty && text::trim(out).empty()) issues.push_back({ErrorCode::MissingField, key, "empty"});
    };
    text_field("id", s.id, true);
    text_field("narrative", s.narrative, true);
    text_field("expected_result", s.expected_result, false);
    text_field("actual_result", s.actual_result, false);
    text_field("potential_fix", s.potential_fix, false);

    if (!raw.contains("story_type")) {
        issues.push_back({ErrorCode::MissingField, "story_type", ""});
    } else if (!raw.at("story_type").is_string()) {
        issues.push_back({ErrorCode::UnknownStoryType, "story_type", raw.at("story_type").dump()});
    } else {
        const auto label = raw.at("story_type").get<std::string>();
        // Exact match only; "exploration" is not silently accepted.
        bool found = false;
        for (const auto& [value, name] : kStoryTypes) {
            if (label == name) {
                s.story_type = value;
                found = true;
            }
        }
        if (!found) issues.push_back({ErrorCode::UnknownStoryType, "story_type", label});
    }

    auto score_field = [&](const char* key, int& out) {
        if (!raw.contains(key)) {
            issues.push_back({ErrorCode::MissingField, key, ""});
            return;
        }
        const auto& v = raw.at(key);
        if (!v.is_number_integer()) {
            issues.push_back({ErrorCode::ScoreOutOfRange, key, v.dump()});
            return;
        }
        const auto n = v.get<long long>();
        if (n < 1 || n > 5) {
            issues.push_back({ErrorCode::ScoreOutOfRange, key, std::to_string(n)});
            return;
        }
        out = static_cast<int>(n);
    };
    score_field("business_value", s.business_value);
    score_field("feasibility", s.feasibility);
    score_field("impact", s.impact);

    if (raw.contains("artifact_corpus")) {
        const auto& corpus = raw.at("artifact_corpus");
        if (!corpus.is_array()) {
            issues.push_back({ErrorCode::InvalidValue, "artifact_corpus", "expected array"});
        } else {
            for (const auto& a : corpus) {
                if (!a.is_string()) {
                    issues.push_back({ErrorCode::InvalidValue, "artifact_corpus", "expected strings"});
                    break;
                }
                s.artifact_corpus.push_back(a.get<std::string>());
            }
        }
    }

    if (!issues.empty()) throw StoryValidationError(std::move(issues));
    return s;
}

// --- filter ------------------------------------------------------------------

bool artifact_documents(std::string_view artifact, std::string_view overview, double threshold) {
    const std::string needle = text::canonical_words(overview);
    if (needle.empty()) return false;
    const std::string hay = " " + text::canonical_words(artifact) + " ";
    if (hay.find(" " + needle + " ") != std::string::npos) return true;
    return text::jaccard(artifact, overview) >= threshold;
}

FilterVerdict apply_uu_filter(const UURecord& candidate, const EnablerStory& story, const FilterConfig& config) {
    if (!candidate.validation) fail(ErrorCode::MissingValidation, "candidate '" + candidate.name + "' has no validation scores");

    FilterVerdict v;
    v.evidence_absence = true;
    for (std::size_t i = 0; i < story.artifact_corpus.size(); ++i) {
        if (artifact_documents(story.artifact_corpus[i], candidate.overview, config.overlap_threshold)) {
            v.evidence_absence = false;
            v.rejection_reasons.push_back("evidence_absence: overview documented in artifact #" + std::to_string(i));
            break;
        }
    }

    v.discovery_triggering = candidate.strategy.has_value();
    if (!v.discovery_triggering) v.rejection_reasons.emplace_back("discovery_triggering: no exploration strategy provenance");

    v.solution_space_impact = !candidate.impacts.empty();
    if (!v.solution_space_impact) v.rejection_reasons.emplace_back("solution_space_impact: no impact category declared");

    const double total = candidate.validation->total();
    const bool credible = total >= config.min_total_v - 1e-12;
    const bool explained = !text::trim(candidate.overlooked_reason).empty();
    v.non_triviality = credible && explained;
    if (!credible) {
        v.rejection_reasons.push_back("non_triviality: V=" + std::to_string(total) + " below " + std::to_string(config.min_total_v));
    }
    if (!explained) v.rejection_reasons.emplace_back("non_triviality: overlooked_reason empty");
    return v;
}

// --- JSON --------------------------------------------------------------------

void to_json(Json& j, const EnablerStory& v) {
    j = Json{{"id", v.id},
             {"narrative", v.narrative},
             {"expected_result", v.expected_result},
             {"actual_result", v.actual_result},
             {"potential_fix", v.potential_fix},
             {"story_type", to_string(v.story_type)},
             {"business_value", v.business_value},
             {"feasibility", v.feasibility},
             {"impact", v.impact},
             {"artifact_corpus", v.artifact_corpus}};
}

void from_json(const Json& j, EnablerStory& v) { v = validate_enabler_story(j); }

void to_json(Json& j, const Defect& v) { j = Json{{"kind", to_string(v.kind)}, {"description", v.description}}; }

void from_json(const Json& j, Defect& v) {
    v.kind = required_enum<DefectKind>(j, "kind", parse_defect_kind);
    v.description = required<std::string>(j, "description");
}

void to_json(Json& j, const StrategicBrief& v) {
    j = Json{{"problem_statement", v.problem_statement},
             {"baseline_solution", v.baseline_solution},
             {"defect_analysis", v.defect_analysis},
             {"risks", v.risks},
             {"defects_explicit_none", v.defects_explicit_none}};
}

void from_json(const Json& j, StrategicBrief& v) {
    v.problem_statement = required<std::string>(j, "problem_statement");
    v.baseline_solution = required<std::string>(j, "baseline_solution");
    v.defect_analysis = j.value("defect_analysis", std::vector<Defect>{});
    v.risks = j.value("risks", std::vector<std::string>{});
    v.defects_explicit_none = j.value("defects_explicit_none", false);
}

void to_json(Json& j, const EvidenceItem& v) {
    j = Json{{"source_url_or_id", v.source},
             {"snippet", v.snippet},
             {"supports", to_string(v.supports)},
             {"retrieved_at", v.retrieved_at}};
}

void from_json(const Json& j, EvidenceItem& v) {
    v.source = required<std::string>(j, "source_url_or_id");
    v.snippet = required<std::string>(j, "snippet");
    if (text::trim(v.snippet).empty()) fail(ErrorCode::InvalidValue, "evidence snippet empty");
    v.supports = required_enum<Component>(j, "supports", parse_component);
    v.retrieved_at = j.value("retrieved_at", std::string{});
}

void to_json(Json& j, const ValidationScore& v) {
    j = Json{{"feasibility_F", v.feasibility()},
             {"implementation_I", v.implementation()},
             {"context_C", v.context()},
             {"total_V", v.total()},
             {"no_evidence",
              {v.no_evidence(Component::F), v.no_evidence(Component::I), v.no_evidence(Component::C)}}};
}

void from_json(const Json& j, ValidationScore& v) {
    std::array<bool, 3> markers{false, false, false};
    if (j.contains("no_evidence")) markers = j.at("no_evidence").get<std::array<bool, 3>>();
    v = ValidationScore::from_components(required<double>(j, "feasibility_F"), required<double>(j, "implementation_I"),
                                         required<double>(j, "context_C"), markers);
}

void to_json(Json& j, const FilterVerdict& v) {
    j = Json{{"evidence_absence", v.evidence_absence},
             {"discovery_triggering", v.discovery_triggering},
             {"solution_space_impact", v.solution_space_impact},
             {"non_triviality", v.non_triviality},
             {"accepted", v.accepted()},
             {"rejection_reasons", v.rejection_reasons}};
}

void from_json(const Json& j, FilterVerdict& v) {
    v.evidence_absence = required<bool>(j, "evidence_absence");
    v.discovery_triggering = required<bool>(j, "discovery_triggering");
    v.solution_space_impact = required<bool>(j, "solution_space_impact");
    v.non_triviality = required<bool>(j, "non_triviality");
    v.rejection_reasons = j.value("rejection_reasons", std::vector<std::string>{});
    if (j.contains("accepted") && j.at("accepted").get<bool>() != v.accepted()) {
        fail(ErrorCode::InvalidValue, "verdict 'accepted' disagrees with its condition flags");
    }
}

void to_json(Json& j, const UURecord& v) {
    Json impacts = Json::array();
    for (auto i : v.impacts) impacts.push_back(to_string(i));
    j = Json{{"id", v.id},
             {"name", v.name},
             {"overview", v.overview},
             {"overlooked_reason", v.overlooked_reason},
             {"evidence", v.evidence},
             {"strategy", v.strategy ? Json(to_string(*v.strategy)) : Json(nullptr)},
             {"validation", v.validation ? Json(*v.validation) : Json(nullptr)},
             {"severity", to_string(v.severity)},
             {"impacts", impacts},
             {"invalidated_clause", v.invalidated_clause},
             {"conflicts_with", v.conflicts_with},
             {"filter_verdict", v.filter_verdict ? Json(*v.filter_verdict) : Json(nullptr)}};
}

void from_json(const Json& j, UURecord& v) {
    v.id = required<std::string>(j, "id");
    v.name = required<std::string>(j, "name");
    v.overview = required<std::string>(j, "overview");
    v.overlooked_reason = j.value("overlooked_reason", std::string{});
    v.evidence = j.value("evidence", std::vector<EvidenceItem>{});
    v.strategy.reset();
    if (j.contains("strategy") && !j.at("strategy").is_null()) {
        v.strategy = required_enum<Strategy>(j, "strategy", parse_strategy);
    }
    v.validation.reset();
    if (j.contains("validation") && !j.at("validation").is_null()) v.validation = j.at("validation").get<ValidationScore>();
    v.severity = j.contains("severity") ? required_enum<Severity>(j, "severity", parse_severity) : Severity::Normal;
    v.impacts.clear();
    for (const auto& i : j.value("impacts", std::vector<std::string>{})) {
        auto p = parse_impact(i);
        if (!p) fail(ErrorCode::InvalidValue, "impact=" + i);
        v.impacts.insert(*p);
    }
    v.invalidated_clause = j.value("invalidated_clause", std::string{});
    v.conflicts_with = j.value("conflicts_with", std::vector<std::string>{});
    v.filter_verdict.reset();
    if (j.contains("filter_verdict") && !j.at("filter_verdict").is_null()) {
        v.filter_verdict = j.at("filter_verdict").get<FilterVerdict>();
    }
}

void to_json(Json& j, const Advantage& v) { j = Json{{"dimension", v.dimension}, {"claim", v.claim}}; }
void from_json(const Json& j, Advantage& v) {
    v.dimension = required<std::string>(j, "dimension");
    v.claim = required<std::string>(j, "claim");
}

void to_json(Json& j, const Plan& v) {
    j = Json{{"toolchain", v.toolchain}, {"phases", v.phases}, {"risks", v.risks}};
}
void from_json(const Json& j, Plan& v) {
    v.toolchain = j.value("toolchain", std::vector<std::string>{});
    v.phases = j.value("phases", std::vector<std::string>{});
    v.risks = j.value("risks", std::vector<std::string>{});
}

void to_json(Json& j, const IntegratedSolution& v) {
    j = Json{{"overview", v.overview},
             {"comparative_analysis", v.comparative_analysis},
             {"parity", v.parity},
             {"implementation_plan", v.implementation_plan}};
}
void from_json(const Json& j, IntegratedSolution& v) {
    v.overview = required<std::string>(j, "overview");
    v.comparative_analysis = j.value("comparative_analysis", std::vector<Advantage>{});
    v.parity = j.value("parity", false);
    v.implementation_plan = j.value("implementation_plan", Plan{});
}

// --- story files ----------------------------------------------------------------

std::vector<EnablerStory> read_story_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    std::vector<EnablerStory> out;
    // A whole-file JSON object or array is accepted alongside JSON-Lines.
    if (auto whole = Json::parse(content, nullptr, false); !whole.is_discarded()) {
        if (whole.is_array()) {
            for (const auto& r : whole) out.push_back(validate_enabler_story(r));
            return out;
        }
        if (whole.is_object()) {
            out.push_back(validate_enabler_story(whole));
            return out;
        }
    }
    std::istringstream lines(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto rec = Json::parse(line, nullptr, false);
        if (rec.is_discarded()) fail(ErrorCode::InvalidValue, path + ":" + std::to_string(lineno) + ": malformed JSON");
        out.push_back(validate_enabler_story(rec));
    }
    return out;
}

void write_story_file(const std::string& path, const std::vector<EnablerStory>& stories) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    for (const auto& s : stories) out << Json(s).dump() << '\n';
}

} // namespace u2f
