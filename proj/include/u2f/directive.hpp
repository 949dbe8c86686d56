#pragma once

#include <optional>
#include <string>
#include <vector>

#include "u2f/config.hpp"

namespace u2f {

enum class DirectiveKind { Preference, Taboo, OptimizationGoal, FreeTextFeedback, RedirectPath };
enum class TargetPhase { Discovery, Exploration, Integration, All };

std::string to_string(DirectiveKind k);
std::string to_string(TargetPhase t);
std::optional<DirectiveKind> parse_directive_kind(std::string_view s);
std::optional<TargetPhase> parse_target_phase(std::string_view s);

/// Human steering input, delivered at stage boundaries.
struct HumanDirective {
    DirectiveKind kind = DirectiveKind::Preference;
    std::string content;
    TargetPhase target_phase = TargetPhase::All;
    std::string timestamp;
    /// OptimizationGoal outside the three standard goals must set this.
    bool custom = false;

    [[nodiscard]] bool applies_to(Phase phase) const;
    bool operator==(const HumanDirective&) const = default;
};

/// The standard optimization goals.
const std::vector<std::string>& standard_optimization_goals();

/// Checks the directive invariants; throws InvalidValue.
void validate_directive(const HumanDirective& d);

void to_json(Json& j, const HumanDirective& d);
/// Validating parser shared by the HTTP API and the interactive terminal.
void from_json(const Json& j, HumanDirective& d);

/// Parses the terminal shorthand `<kind> [@<phase>]: <content>`, for example
/// `goal: cost first` or `taboo @Integration: no cloud dependencies`.
/// Kind aliases: pref, taboo, goal, feedback, redirect.
HumanDirective parse_directive_command(std::string_view line);

/// Renders the "Human constraints" block appended to system prompts; empty
/// when no directive applies.
std::string render_constraints(const std::vector<HumanDirective>& directives, Phase phase);

} // namespace u2f
