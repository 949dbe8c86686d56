#pragma once

#include <map>
#include <string>
#include <vector>

#include "u2f/directive.hpp"

namespace u2f {

struct RenderedPrompt {
    std::string system;
    std::string user;
};

/// Versioned prompt templates, one per stage. The templates under prompts/
/// are compiled in; a directory of `<name>.txt` files can override them.
///
/// Template format:
///
///     [system]
///     text with {placeholders}
///     [user]
///     text with {placeholders}
///
/// Files without section markers are plain resources (see text()).
class PromptLibrary {
public:
    /// Library holding the compiled-in templates.
    PromptLibrary();

    void override_from_dir(const std::string& dir);
    void set(const std::string& name, std::string content);

    /// Substitutes every {placeholder}; an unknown placeholder is an error so
    /// template drift is caught. Constraints, when non-empty, are appended to
    /// the system prompt as their own section.
    [[nodiscard]] RenderedPrompt render(const std::string& name, const std::map<std::string, std::string>& vars,
                                        const std::string& constraints = {}) const;

    [[nodiscard]] const std::string& text(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> names() const;

    static const PromptLibrary& defaults();

private:
    std::map<std::string, std::string> templates_;
};

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Markers that identify each baseline mode's template in a recorded prompt.
inline constexpr std::string_view kZeroShotMarker = "Describe your solution.";
inline constexpr std::string_view kRoleBasedMarker = "senior software architect";
inline constexpr std::string_view kSeapMarker = "software engineering analysis steps";

} // namespace u2f
