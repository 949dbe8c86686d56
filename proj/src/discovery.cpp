#include "u2f/discovery.hpp"

#include "u2f/text.hpp"

namespace u2f {

std::map<std::string, std::string> story_vars(const EnablerStory& story) {
    return {{"story_id", story.id},
            {"story_type", to_string(story.story_type)},
            {"narrative", story.narrative},
            {"expected_result", story.expected_result},
            {"actual_result", story.actual_result},
            {"potential_fix", story.potential_fix}};
}

namespace {

/// Plain-text completion with a sanity check and config.max_repairs repairs.
/// Returns the final text and the last problem (empty when accepted).
std::pair<std::string, std::string> checked_text(const ChatRequest& req, const StageContext& ctx,
                                                 const std::function<std::string(const std::string&)>& check) {
    ChatRequest attempt = req;
    std::string out;
    std::string problem;
    for (int i = 0; i <= std::max(0, ctx.config().max_repairs); ++i) {
        out = text::trim(ctx.gateway().complete(attempt, ctx.call_observer()).text);
        problem = check(out);
        if (problem.empty()) break;
        attempt = req.with_user_prompt(repair_prompt(req.user_prompt(), problem));
    }
    return {out, problem};
}

} // namespace

std::string refine_problem(const EnablerStory& story, const StageContext& ctx) {
    const auto req = ctx.request("discovery.refine", "discovery.refine", story_vars(story), 256);
    auto [out, problem] = checked_text(req, ctx, [](const std::string& t) -> std::string {
        if (t.empty()) return "the problem statement is empty";
        if (text::word_count(t) > kMaxProblemWords) {
            return "the problem statement has " + std::to_string(text::word_count(t)) + " words; use at most " +
                   std::to_string(kMaxProblemWords);
        }
        return {};
    });
    if (out.empty()) fail(ErrorCode::EmptyStatement, "refined problem statement empty after repair");
    if (!problem.empty()) fail(ErrorCode::SchemaViolation, "discovery.refine: " + problem);
    return out;
}

std::string generate_baseline(const EnablerStory& story, const StageContext& ctx) {
    if (text::trim(story.potential_fix).empty()) fail(ErrorCode::MissingPotentialFix, "story " + story.id);
    const auto fix_words = text::content_words(story.potential_fix);
    const auto req = ctx.request("discovery.baseline", "discovery.baseline", story_vars(story), 512);
    auto [out, problem] = checked_text(req, ctx, [&](const std::string& t) -> std::string {
        if (t.empty()) return "the baseline solution is empty";
        const auto words = text::content_words(t);
        for (const auto& w : fix_words) {
            if (words.count(w)) return {};
        }
        return "the baseline must build on the proposed fix: " + story.potential_fix;
    });
    if (!problem.empty()) fail(ErrorCode::SchemaViolation, "discovery.baseline: " + problem);
    return out;
}

void to_json(Json& j, const DefectReport& r) {
    j = Json{{"defects", r.defects}, {"risks", r.risks}, {"explicit_none", r.explicit_none}};
}

DefectReport identify_defects(const std::string& problem, const std::string& baseline, const StageContext& ctx) {
    if (text::trim(problem).empty() || text::trim(baseline).empty()) {
        fail(ErrorCode::InvalidValue, "identify_defects needs a problem statement and a baseline");
    }
    const FieldSchema schema{{
        FieldSpec::records("defects",
                           {FieldSpec::enumeration("kind", {"ImplicitAssumption", "ScopeLimitation", "SideEffect"}),
                            FieldSpec::text("description")},
                           0, false),
        FieldSpec::flag("no_defects", "the baseline genuinely has no defects"),
        FieldSpec::list("risks", 0, false),
        FieldSpec::text("search_request", false, "one web search query, only if external facts are needed"),
    }};
    const RecordCheck check = [](const Json& r) -> std::string {
        const bool none = r.value("no_defects", false);
        const bool any = r.contains("defects") && !r.at("defects").empty();
        if (!none && !any) return "list the defects, or include the no_defects section if there are none";
        if (none && any) return "no_defects contradicts the listed defects";
        return {};
    };
    std::map<std::string, std::string> vars{
        {"problem_statement", problem}, {"baseline_solution", baseline}, {"evidence", ""}};
    auto result = ctx.gateway().complete_structured(ctx.request("discovery.defects", "discovery.defects", vars),
                                                    schema, ctx.config().max_repairs, ctx.call_observer(), check);
    if (ctx.search() && result.record.contains("search_request")) {
        const auto evidence = ctx.try_search(result.record.at("search_request").get<std::string>(),
                                             SearchPurpose::ProbeWeakness, "discovery.defects");
        if (!evidence.empty()) {
            vars["evidence"] = render_evidence(evidence);
            result = ctx.gateway().complete_structured(ctx.request("discovery.defects", "discovery.defects", vars),
                                                       schema, ctx.config().max_repairs, ctx.call_observer(), check);
        }
    }
    DefectReport out;
    out.explicit_none = result.record.value("no_defects", false);
    for (const auto& row : result.record.value("defects", Json::array())) {
        out.defects.push_back({*parse_defect_kind(row.at("kind").get<std::string>()), row.at("description").get<std::string>()});
    }
    out.risks = result.record.value("risks", std::vector<std::string>{});
    return out;
}

StrategicBrief run_discovery(const EnablerStory& story, StageContext& ctx) {
    ctx.set_phase(Phase::Discovery);
    StrategicBrief brief;
    brief.problem_statement = ctx.substage("refine_problem", [&] { return refine_problem(story, ctx); });
    brief.baseline_solution = ctx.substage("generate_baseline", [&] { return generate_baseline(story, ctx); });
    const auto report = ctx.substage("identify_defects", [&] {
        return identify_defects(brief.problem_statement, brief.baseline_solution, ctx);
    });
    brief.defect_analysis = report.defects;
    brief.risks = report.risks;
    brief.defects_explicit_none = report.explicit_none;
    return brief;
}

} // namespace u2f
