#pragma once

#include <string>
#include <vector>

#include "u2f/domain.hpp"
#include "u2f/stage.hpp"

namespace u2f {

inline constexpr std::size_t kMaxProblemWords = 60;

/// Restates the core problem in at most 60 words (one repair re-prompt).
std::string refine_problem(const EnablerStory& story, const StageContext& ctx);

/// Baseline solution grounded in the story's potential fix; must share at
/// least one content word with it.
std::string generate_baseline(const EnablerStory& story, const StageContext& ctx);

struct DefectReport {
    std::vector<Defect> defects;
    std::vector<std::string> risks;
    bool explicit_none = false;
};
void to_json(Json& j, const DefectReport& r);

/// Implicit assumptions, scope limitations and side effects of the baseline.
/// The agent may ask for one ProbeWeakness search, after which it is
/// re-prompted with the evidence.
DefectReport identify_defects(const std::string& problem, const std::string& baseline, const StageContext& ctx);

/// The three stages in order, each a boundary. Errors carry the stage name.
StrategicBrief run_discovery(const EnablerStory& story, StageContext& ctx);

/// Template variables shared by every prompt that shows the story.
std::map<std::string, std::string> story_vars(const EnablerStory& story);

} // namespace u2f
