#pragma once

#include <string>
#include <vector>

#include "u2f/domain.hpp"
#include "u2f/stage.hpp"

namespace u2f {

enum class ConflictRelation { Challenges, Enhances };
std::string to_string(ConflictRelation r);

struct ConflictEntry {
    std::string uu_id;
    ConflictRelation relation = ConflictRelation::Enhances;
    std::string affected_aspect;
    bool operator==(const ConflictEntry&) const = default;
};

/// Every accepted UU appears in exactly one entry.
struct ConflictMap {
    std::vector<ConflictEntry> entries;
    bool operator==(const ConflictMap&) const = default;
};

void to_json(Json& j, const ConflictEntry& v);
void to_json(Json& j, const ConflictMap& v);

inline const std::vector<std::string>& advantage_dimensions() {
    static const std::vector<std::string> kDims{"cost", "performance", "risk", "capability", "other"};
    return kDims;
}

ConflictMap map_conflicts(const StrategicBrief& brief, const std::vector<UURecord>& uus, const StageContext& ctx);

/// The redesigned solution. Consults search once (RefactorSupport) when
/// search is enabled; every Challenges UU must be named in the text.
std::string refactor_solution(const StrategicBrief& brief, const std::vector<UURecord>& uus,
                              const ConflictMap& conflicts, const StageContext& ctx);

struct AdvantageReport {
    std::vector<Advantage> advantages;
    bool parity = false;
};
void to_json(Json& j, const AdvantageReport& v);

AdvantageReport attribute_advantages(const std::string& refactored, const std::string& baseline,
                                     const StageContext& ctx);

enum class IntegrationControl { Done, DemandDeeperExploration, StrategicReset };
std::string to_string(IntegrationControl c);

struct PlanOutcome {
    Plan plan;
    IntegrationControl control = IntegrationControl::Done;
    std::string reason;
};
void to_json(Json& j, const PlanOutcome& v);

/// Roadmap plus the agent's decision on how to proceed. IncompletePlan
/// (naming the missing sections) applies only when the agent says done.
PlanOutcome plan_implementation(const std::string& refactored, const StageContext& ctx);

struct IntegrationOutcome {
    IntegratedSolution solution;
    IntegrationControl control = IntegrationControl::Done;
    std::string reason;
    ConflictMap conflicts;
};
void to_json(Json& j, const IntegrationOutcome& v);

/// The four stages in order. With no accepted UUs (ablations, empty
/// exploration) the conflict map is empty and no mapping call is made.
IntegrationOutcome run_integration(const StrategicBrief& brief, const std::vector<UURecord>& uus, StageContext& ctx);

} // namespace u2f
