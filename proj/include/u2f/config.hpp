#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "u2f/domain.hpp"

namespace u2f {

enum class Mode { U2F, ZeroShot, RoleBased, SEAP };
enum class Phase { Discovery, Exploration, Integration, Done, Failed };

std::string to_string(Mode m);
std::string to_string(Phase p);
std::optional<Mode> parse_mode(std::string_view s);
std::optional<Phase> parse_phase(std::string_view s);

/// Everything that determines how one case is run. Snapshotted into every
/// trace so a run can be replayed and audited.
struct RunConfig {
    Mode mode = Mode::U2F;
    std::set<Phase> enabled_stages{Phase::Discovery, Phase::Exploration, Phase::Integration};
    bool search_enabled = true;
    int max_resets = 3;
    int max_deepens = 2;
    std::string chat_provider = "mock";
    std::string search_provider = "fixture";
    FilterConfig thresholds;
    /// Soft cap on UU candidates per exploration pass, before filtering.
    int max_candidates = 5;
    std::vector<std::string> analogy_domains{"Biology", "Psychology", "Economics", "Physics"};
    int max_repairs = 1;
    bool parallel_analogies = true;
    int search_max_results = 5;
    /// Name of the ablation variant that produced this config ("Full" otherwise).
    std::string variant = "Full";

    [[nodiscard]] bool stage_enabled(Phase p) const { return enabled_stages.count(p) != 0; }
    bool operator==(const RunConfig&) const = default;
};

void to_json(Json& j, const RunConfig& c);
void from_json(const Json& j, RunConfig& c);

} // namespace u2f
