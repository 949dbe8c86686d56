#include "u2f/directive.hpp"

#include <algorithm>

#include "u2f/text.hpp"

namespace u2f {

namespace {

constexpr std::array<std::pair<DirectiveKind, const char*>, 5> kKinds{{
    {DirectiveKind::Preference, "Preference"},
    {DirectiveKind::Taboo, "Taboo"},
    {DirectiveKind::OptimizationGoal, "OptimizationGoal"},
    {DirectiveKind::FreeTextFeedback, "FreeTextFeedback"},
    {DirectiveKind::RedirectPath, "RedirectPath"},
}};
constexpr std::array<std::pair<TargetPhase, const char*>, 4> kTargets{{
    {TargetPhase::Discovery, "Discovery"},
    {TargetPhase::Exploration, "Exploration"},
    {TargetPhase::Integration, "Integration"},
    {TargetPhase::All, "All"},
}};

} // namespace

std::string to_string(DirectiveKind k) {
    for (const auto& [v, n] : kKinds) {
        if (v == k) return n;
    }
    return "?";
}

std::string to_string(TargetPhase t) {
    for (const auto& [v, n] : kTargets) {
        if (v == t) return n;
    }
    return "?";
}

std::optional<DirectiveKind> parse_directive_kind(std::string_view s) {
    const auto key = text::to_lower(text::trim(s));
    for (const auto& [v, n] : kKinds) {
        if (key == text::to_lower(n)) return v;
    }
    if (key == "pref") return DirectiveKind::Preference;
    if (key == "goal") return DirectiveKind::OptimizationGoal;
    if (key == "feedback") return DirectiveKind::FreeTextFeedback;
    if (key == "redirect") return DirectiveKind::RedirectPath;
    return std::nullopt;
}

std::optional<TargetPhase> parse_target_phase(std::string_view s) {
    const auto key = text::to_lower(text::trim(s));
    for (const auto& [v, n] : kTargets) {
        if (key == text::to_lower(n)) return v;
    }
    return std::nullopt;
}

bool HumanDirective::applies_to(Phase phase) const {
    switch (target_phase) {
    case TargetPhase::All: return true;
    case TargetPhase::Discovery: return phase == Phase::Discovery;
    case TargetPhase::Exploration: return phase == Phase::Exploration;
    case TargetPhase::Integration: return phase == Phase::Integration;
    }
    return false;
}

const std::vector<std::string>& standard_optimization_goals() {
    static const std::vector<std::string> kGoals{"cost first", "innovation first", "minimum risk"};
    return kGoals;
}

void validate_directive(const HumanDirective& d) {
    if (text::trim(d.content).empty()) fail(ErrorCode::InvalidValue, "directive content is empty");
    if (d.kind == DirectiveKind::OptimizationGoal && !d.custom) {
        const auto& goals = standard_optimization_goals();
        if (std::find(goals.begin(), goals.end(), text::trim(d.content)) == goals.end()) {
            fail(ErrorCode::InvalidValue,
                 "optimization goal '" + d.content + "' is not standard; set custom=true to use it");
        }
    }
}

void to_json(Json& j, const HumanDirective& d) {
    j = Json{{"kind", to_string(d.kind)},
             {"content", d.content},
             {"target_phase", to_string(d.target_phase)},
             {"timestamp", d.timestamp},
             {"custom", d.custom}};
}

void from_json(const Json& j, HumanDirective& d) {
    if (!j.is_object()) fail(ErrorCode::InvalidValue, "directive must be a JSON object");
    if (!j.contains("kind") || !j.at("kind").is_string()) fail(ErrorCode::MissingField, "kind");
    auto kind = parse_directive_kind(j.at("kind").get<std::string>());
    if (!kind) fail(ErrorCode::InvalidValue, "directive kind " + j.at("kind").dump());
    HumanDirective out;
    out.kind = *kind;
    if (!j.contains("content") || !j.at("content").is_string()) fail(ErrorCode::MissingField, "content");
    out.content = j.at("content").get<std::string>();
    if (j.contains("target_phase")) {
        auto t = parse_target_phase(j.at("target_phase").get<std::string>());
        if (!t) fail(ErrorCode::InvalidValue, "target_phase " + j.at("target_phase").dump());
        out.target_phase = *t;
    }
    out.timestamp = j.value("timestamp", std::string{});
    out.custom = j.value("custom", false);
    validate_directive(out);
    d = std::move(out);
}

HumanDirective parse_directive_command(std::string_view line) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
        fail(ErrorCode::InvalidValue, "expected '<kind> [@phase]: <content>'");
    }
    std::string head = text::trim(line.substr(0, colon));
    std::string target = "All";
    if (auto at = head.find('@'); at != std::string::npos) {
        target = text::trim(head.substr(at + 1));
        head = text::trim(head.substr(0, at));
    }
    Json j{{"kind", head}, {"content", text::trim(line.substr(colon + 1))}, {"target_phase", target}};
    auto kind = parse_directive_kind(head);
    if (kind && *kind == DirectiveKind::OptimizationGoal) {
        const auto& goals = standard_optimization_goals();
        const auto content = j["content"].get<std::string>();
        j["custom"] = std::find(goals.begin(), goals.end(), content) == goals.end();
    }
    if (kind) j["kind"] = to_string(*kind);
    return j.get<HumanDirective>();
}

std::string render_constraints(const std::vector<HumanDirective>& directives, Phase phase) {
    std::string out;
    for (const auto& d : directives) {
        if (!d.applies_to(phase)) continue;
        out += "- [" + to_string(d.kind) + "] " + d.content + "\n";
    }
    if (out.empty()) return out;
    return "Human constraints:\n" + out;
}

} // namespace u2f
