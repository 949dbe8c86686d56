#include "u2f/integration.hpp"

#include <algorithm>

#include "u2f/text.hpp"

namespace u2f {

std::string to_string(ConflictRelation r) { return r == ConflictRelation::Challenges ? "Challenges" : "Enhances"; }

std::string to_string(IntegrationControl c) {
    switch (c) {
    case IntegrationControl::Done: return "Done";
    case IntegrationControl::DemandDeeperExploration: return "DemandDeeperExploration";
    case IntegrationControl::StrategicReset: return "StrategicReset";
    }
    return "?";
}

void to_json(Json& j, const ConflictEntry& v) {
    j = Json{{"uu_id", v.uu_id}, {"relation", to_string(v.relation)}, {"affected_aspect", v.affected_aspect}};
}

void to_json(Json& j, const ConflictMap& v) { j = Json{{"entries", v.entries}}; }

void to_json(Json& j, const AdvantageReport& v) { j = Json{{"advantages", v.advantages}, {"parity", v.parity}}; }

void to_json(Json& j, const PlanOutcome& v) {
    j = Json{{"plan", v.plan}, {"control", to_string(v.control)}, {"reason", v.reason}};
}

void to_json(Json& j, const IntegrationOutcome& v) {
    j = Json{{"solution", v.solution},
             {"control", to_string(v.control)},
             {"reason", v.reason},
             {"conflicts", v.conflicts}};
}

namespace {

std::string uu_lines(const std::vector<UURecord>& uus) {
    std::vector<std::string> lines;
    for (const auto& u : uus) lines.push_back(u.id + ": " + u.name + " - " + u.overview);
    return bullet_list(lines);
}

const UURecord* find_uu(const std::vector<UURecord>& uus, const std::string& id) {
    for (const auto& u : uus) {
        if (text::to_lower(u.id) == text::to_lower(text::trim(id))) return &u;
    }
    return nullptr;
}

} // namespace

ConflictMap map_conflicts(const StrategicBrief& brief, const std::vector<UURecord>& uus, const StageContext& ctx) {
    if (uus.empty()) fail(ErrorCode::NoAcceptedUUs, "conflict mapping needs at least one accepted UU");
    const FieldSchema schema{{FieldSpec::records(
        "entries",
        {FieldSpec::text("uu_id"), FieldSpec::enumeration("relation", {"Challenges", "Enhances"}),
         FieldSpec::text("aspect")},
        1)}};
    const RecordCheck check = [&](const Json& r) -> std::string {
        std::map<std::string, int> seen;
        for (const auto& row : r.at("entries")) {
            const auto* u = find_uu(uus, row.at("uu_id").get<std::string>());
            if (!u) return "unknown factor id '" + row.at("uu_id").get<std::string>() + "'";
            ++seen[u->id];
        }
        for (const auto& u : uus) {
            if (seen[u.id] != 1) return "factor " + u.id + " must appear exactly once (found " + std::to_string(seen[u.id]) + ")";
        }
        return {};
    };
    const auto r = ctx.gateway().complete_structured(
        ctx.request("integration.conflicts", "integration.conflicts",
                    {{"problem_statement", brief.problem_statement},
                     {"baseline_solution", brief.baseline_solution},
                     {"uus", uu_lines(uus)}}),
        schema, ctx.config().max_repairs, ctx.call_observer(), check);
    ConflictMap out;
    // Entries follow the UU order so the map is canonical.
    for (const auto& u : uus) {
        for (const auto& row : r.record.at("entries")) {
            if (find_uu(uus, row.at("uu_id").get<std::string>())->id != u.id) continue;
            out.entries.push_back({u.id,
                                   row.at("relation").get<std::string>() == "Challenges" ? ConflictRelation::Challenges
                                                                                         : ConflictRelation::Enhances,
                                   row.at("aspect").get<std::string>()});
        }
    }
    return out;
}

std::string refactor_solution(const StrategicBrief& brief, const std::vector<UURecord>& uus,
                              const ConflictMap& conflicts, const StageContext& ctx) {
    std::vector<const UURecord*> challenges;
    std::vector<std::string> lines;
    for (const auto& e : conflicts.entries) {
        const auto* u = find_uu(uus, e.uu_id);
        if (!u) fail(ErrorCode::InvalidValue, "conflict map names unknown UU " + e.uu_id);
        if (e.relation == ConflictRelation::Challenges) challenges.push_back(u);
        lines.push_back(u->name + " (" + to_string(e.relation) + " " + e.affected_aspect + "): " + u->overview);
    }

    std::string query = brief.problem_statement;
    if (!challenges.empty()) {
        std::vector<std::string> names;
        for (const auto* u : challenges) names.push_back(u->name);
        query = text::join(names, " ") + " " + brief.problem_statement;
    }
    const auto evidence = ctx.try_search(query, SearchPurpose::RefactorSupport, "integration.refactor");

    const FieldSchema schema{{FieldSpec::text("refactored_solution")}};
    const RecordCheck check = [&](const Json& r) -> std::string {
        const auto body = r.at("refactored_solution").get<std::string>();
        std::vector<std::string> missing;
        for (const auto* u : challenges) {
            if (!text::contains_ci(body, u->name)) missing.push_back(u->name);
        }
        if (missing.empty()) return {};
        return "the solution does not address: " + text::join(missing, ", ");
    };
    const auto r = ctx.gateway().complete_structured(
        ctx.request("integration.refactor", "integration.refactor",
                    {{"problem_statement", brief.problem_statement},
                     {"baseline_solution", brief.baseline_solution},
                     {"conflicts", bullet_list(lines)},
                     {"evidence", evidence.empty() ? "(none)" : render_evidence(evidence)}},
                    2048),
        schema, ctx.config().max_repairs, ctx.call_observer(), check, ErrorCode::UnaddressedConflict);
    return r.record.at("refactored_solution").get<std::string>();
}

AdvantageReport attribute_advantages(const std::string& refactored, const std::string& baseline,
                                     const StageContext& ctx) {
    if (text::trim(refactored).empty() || text::trim(baseline).empty()) {
        fail(ErrorCode::InvalidValue, "attribute_advantages needs both solutions");
    }
    const FieldSchema schema{{
        FieldSpec::records("advantages",
                           {FieldSpec::enumeration("dimension", advantage_dimensions()), FieldSpec::text("claim")}, 0,
                           false),
        FieldSpec::flag("parity", "the redesign has no advantage over the original"),
    }};
    const RecordCheck check = [](const Json& r) -> std::string {
        const bool any = r.contains("advantages") && !r.at("advantages").empty();
        const bool parity = r.value("parity", false);
        if (!any && !parity) return "list advantages, or include the parity section";
        if (any && parity) return "parity contradicts the listed advantages";
        return {};
    };
    const auto r = ctx.gateway().complete_structured(
        ctx.request("integration.advantages", "integration.advantages",
                    {{"refactored", refactored}, {"baseline_solution", baseline}}),
        schema, ctx.config().max_repairs, ctx.call_observer(), check);
    AdvantageReport out;
    out.parity = r.record.value("parity", false);
    for (const auto& row : r.record.value("advantages", Json::array())) {
        out.advantages.push_back({row.at("dimension").get<std::string>(), row.at("claim").get<std::string>()});
    }
    return out;
}

PlanOutcome plan_implementation(const std::string& refactored, const StageContext& ctx) {
    if (text::trim(refactored).empty()) fail(ErrorCode::InvalidValue, "plan_implementation needs a solution");
    const FieldSchema schema{{
        FieldSpec::list("toolchain", 0, false),
        FieldSpec::list("phases", 0, false),
        FieldSpec::list("risks", 0, false),
        FieldSpec::enumeration("control", {"done", "deepen", "reset"}),
        FieldSpec::text("reason"),
    }};
    const RecordCheck check = [](const Json& r) -> std::string {
        if (r.at("control").get<std::string>() != "done") return {};
        std::vector<std::string> missing;
        for (const char* k : {"toolchain", "phases", "risks"}) {
            if (!r.contains(k) || r.at(k).empty()) missing.emplace_back(k);
        }
        if (missing.empty()) return {};
        return "plan is missing: " + text::join(missing, ", ");
    };
    const auto r = ctx.gateway().complete_structured(
        ctx.request("integration.plan", "integration.plan", {{"refactored", refactored}}), schema,
        ctx.config().max_repairs, ctx.call_observer(), check, ErrorCode::IncompletePlan);
    PlanOutcome out;
    out.plan.toolchain = r.record.value("toolchain", std::vector<std::string>{});
    out.plan.phases = r.record.value("phases", std::vector<std::string>{});
    out.plan.risks = r.record.value("risks", std::vector<std::string>{});
    const auto c = r.record.at("control").get<std::string>();
    out.control = c == "done"     ? IntegrationControl::Done
                  : c == "deepen" ? IntegrationControl::DemandDeeperExploration
                                  : IntegrationControl::StrategicReset;
    out.reason = r.record.at("reason").get<std::string>();
    return out;
}

IntegrationOutcome run_integration(const StrategicBrief& brief, const std::vector<UURecord>& uus, StageContext& ctx) {
    ctx.set_phase(Phase::Integration);
    IntegrationOutcome out;
    out.conflicts = ctx.substage("map_conflicts", [&] {
        return uus.empty() ? ConflictMap{} : map_conflicts(brief, uus, ctx);
    });
    out.solution.overview =
        ctx.substage("refactor_solution", [&] { return refactor_solution(brief, uus, out.conflicts, ctx); });
    const auto adv = ctx.substage("attribute_advantages", [&] {
        return attribute_advantages(out.solution.overview, brief.baseline_solution, ctx);
    });
    out.solution.comparative_analysis = adv.advantages;
    out.solution.parity = adv.parity;
    const auto plan = ctx.substage("plan_implementation", [&] { return plan_implementation(out.solution.overview, ctx); });
    out.solution.implementation_plan = plan.plan;
    out.control = plan.control;
    out.reason = plan.reason;
    return out;
}

} // namespace u2f
