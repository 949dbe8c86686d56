#include "u2f/exploration.hpp"

#include <algorithm>
#include <future>
#include <sstream>

#include "u2f/text.hpp"

namespace u2f {

SourceDomain classify_domain(std::string_view name) {
    const auto n = text::to_lower(text::trim(name));
    if (n == "biology") return SourceDomain::Biology;
    if (n == "psychology") return SourceDomain::Psychology;
    if (n == "economics") return SourceDomain::Economics;
    if (n == "physics") return SourceDomain::Physics;
    return SourceDomain::Other;
}

std::string to_string(ExplorationControlKind k) {
    switch (k) {
    case ExplorationControlKind::Continue: return "Continue";
    case ExplorationControlKind::ResetToDiscovery: return "ResetToDiscovery";
    case ExplorationControlKind::DeferToIntegration: return "DeferToIntegration";
    }
    return "?";
}

// --- JSON ------------------------------------------------------------------------

void to_json(Json& j, const GeneralProblem& v) {
    j = Json{{"abstraction", v.abstraction}, {"invariant_structure", v.invariant_structure}};
}

void to_json(Json& j, const AnalogyOutcome& v) {
    j = Json{{"domain", v.domain}, {"no_analogy", v.no_analogy()}};
    if (v.candidate) {
        j["source_mechanism"] = v.candidate->source_mechanism;
        j["mapped_solution"] = v.candidate->mapped_solution;
    }
}

void to_json(Json& j, const PrerequisiteChain& v) {
    j = Json{{"goal", v.goal}, {"prerequisites", v.prerequisites}, {"pruned", v.pruned}};
}

void to_json(Json& j, const ExplorationControl& v) {
    j = Json{{"kind", to_string(v.kind)}, {"uu_ids", v.uu_ids}, {"reason", v.reason}};
}

void from_json(const Json& j, ExplorationControl& v) {
    const auto k = j.at("kind").get<std::string>();
    if (k == "Continue") {
        v.kind = ExplorationControlKind::Continue;
    } else if (k == "ResetToDiscovery") {
        v.kind = ExplorationControlKind::ResetToDiscovery;
    } else if (k == "DeferToIntegration") {
        v.kind = ExplorationControlKind::DeferToIntegration;
    } else {
        fail(ErrorCode::InvalidValue, "exploration control " + k);
    }
    v.uu_ids = j.value("uu_ids", std::vector<std::string>{});
    v.reason = j.value("reason", std::string{});
}

void to_json(Json& j, const ExplorationReport& v) {
    j = Json{{"uus", v.uus}, {"rejected", v.rejected}, {"control", v.control}};
}

void from_json(const Json& j, ExplorationReport& v) {
    v.uus = j.at("uus").get<std::vector<UURecord>>();
    v.rejected = j.value("rejected", std::vector<UURecord>{});
    v.control = j.at("control").get<ExplorationControl>();
}

// --- abstraction -------------------------------------------------------------------

std::vector<std::string> abstraction_stopwords(const PromptLibrary& prompts) {
    std::vector<std::string> out;
    std::istringstream in(prompts.text("abstraction_stopwords"));
    std::string line;
    while (std::getline(in, line)) {
        auto w = text::to_lower(text::trim(line));
        if (!w.empty() && w[0] != '#') out.push_back(w);
    }
    return out;
}

std::vector<std::string> concrete_terms(std::string_view abstraction, const std::vector<std::string>& stopwords) {
    const auto words = text::word_set(abstraction);
    std::vector<std::string> found;
    for (const auto& s : stopwords) {
        if (words.count(s)) found.push_back(s);
    }
    return found;
}

namespace {

std::vector<std::string> defect_lines(const StrategicBrief& brief) {
    std::vector<std::string> out;
    for (const auto& d : brief.defect_analysis) out.push_back(to_string(d.kind) + ": " + d.description);
    return out;
}

} // namespace

GeneralProblem abstract_problem(const StrategicBrief& brief, const StageContext& ctx) {
    if (text::trim(brief.problem_statement).empty()) fail(ErrorCode::InvalidValue, "brief without problem statement");
    const auto stopwords = abstraction_stopwords(ctx.prompts());
    const FieldSchema schema{{FieldSpec::text("abstraction", true, "domain-independent restatement"),
                              FieldSpec::list("invariants", 1)}};
    const RecordCheck check = [&](const Json& r) -> std::string {
        const auto terms = concrete_terms(r.at("abstraction").get<std::string>(), stopwords);
        if (terms.empty()) return {};
        return "the abstraction still uses domain-specific terms (" + text::join(terms, ", ") +
               "); restate it without them";
    };
    const auto req = ctx.request("exploration.abstract", "exploration.abstract",
                                 {{"problem_statement", brief.problem_statement},
                                  {"baseline_solution", brief.baseline_solution},
                                  {"defects", bullet_list(defect_lines(brief))}});
    const auto r = ctx.gateway().complete_structured(req, schema, ctx.config().max_repairs, ctx.call_observer(), check,
                                                     ErrorCode::AbstractionTooConcrete);
    return {r.record.at("abstraction").get<std::string>(), r.record.at("invariants").get<std::vector<std::string>>()};
}

// --- analogies ------------------------------------------------------------------------

namespace {

AnalogyOutcome one_analogy(const GeneralProblem& gp, const std::string& domain, const StageContext& ctx) {
    const FieldSchema schema{{
        FieldSpec::text("source_mechanism", false),
        FieldSpec::text("mapped_solution", false, "how the mechanism carries back into software"),
        FieldSpec::flag("no_analogy", "the field offers no useful analogy"),
        FieldSpec::text("search_request", false, "one web search query, only if facts are needed"),
    }};
    const RecordCheck check = [](const Json& r) -> std::string {
        if (r.value("no_analogy", false)) return {};
        if (!r.contains("source_mechanism") || !r.contains("mapped_solution")) {
            return "give both source_mechanism and mapped_solution, or the no_analogy section";
        }
        return {};
    };
    std::map<std::string, std::string> vars{{"abstraction", gp.abstraction},
                                            {"invariants", bullet_list(gp.invariant_structure)},
                                            {"domain", domain},
                                            {"evidence", ""}};
    auto r = ctx.gateway().complete_structured(ctx.request("exploration.analogy", "exploration.analogy", vars), schema,
                                               ctx.config().max_repairs, ctx.call_observer(), check);
    if (ctx.search() && r.record.contains("search_request") && !r.record.value("no_analogy", false)) {
        const auto evidence = ctx.try_search(r.record.at("search_request").get<std::string>(),
                                             SearchPurpose::GroundAnalogy, "exploration.analogy");
        if (!evidence.empty()) {
            vars["evidence"] = render_evidence(evidence);
            r = ctx.gateway().complete_structured(ctx.request("exploration.analogy", "exploration.analogy", vars),
                                                  schema, ctx.config().max_repairs, ctx.call_observer(), check);
        }
    }
    AnalogyOutcome out{domain, std::nullopt};
    if (!r.record.value("no_analogy", false)) {
        out.candidate = AnalogyCandidate{domain, r.record.at("source_mechanism").get<std::string>(),
                                         r.record.at("mapped_solution").get<std::string>()};
    }
    return out;
}

} // namespace

std::vector<AnalogyOutcome> map_analogies(const GeneralProblem& gp, const std::vector<std::string>& domains,
                                          const StageContext& ctx) {
    if (domains.empty()) fail(ErrorCode::InvalidValue, "map_analogies needs at least one domain");
    std::vector<EventBuffer> buffers(domains.size());
    std::vector<std::optional<AnalogyOutcome>> outcomes(domains.size());
    std::vector<std::optional<Error>> errors(domains.size());

    auto task = [&](std::size_t i) {
        const auto sub = ctx.buffered(buffers[i]);
        try {
            outcomes[i] = one_analogy(gp, domains[i], sub);
        } catch (const Error& e) {
            errors[i] = e;
        }
    };
    if (ctx.config().parallel_analogies && domains.size() > 1) {
        std::vector<std::future<void>> futures;
        for (std::size_t i = 0; i < domains.size(); ++i) futures.push_back(std::async(std::launch::async, task, i));
        for (auto& f : futures) f.get();
    } else {
        for (std::size_t i = 0; i < domains.size(); ++i) {
            task(i);
            if (errors[i]) break;
        }
    }
    // Deterministic join: events and the first error in domain order.
    std::vector<AnalogyOutcome> out;
    for (std::size_t i = 0; i < domains.size(); ++i) {
        ctx.record_all(buffers[i]);
        if (errors[i]) throw *errors[i];
        if (outcomes[i]) out.push_back(*outcomes[i]);
    }
    return out;
}

// --- reverse thinking ---------------------------------------------------------------------

PrerequisiteChain reverse_chain(const std::string& goal, const StageContext& ctx) {
    if (text::trim(goal).empty()) fail(ErrorCode::InvalidValue, "reverse_chain needs a goal");
    const FieldSchema schema{{FieldSpec::list("prerequisites", 0), FieldSpec::list("pruned", 0, false)}};
    const RecordCheck check = [](const Json& r) -> std::string {
        if (r.at("prerequisites").empty()) return "list at least one prerequisite";
        return {};
    };
    const auto r = ctx.gateway().complete_structured(
        ctx.request("exploration.reverse", "exploration.reverse", {{"goal", goal}}), schema, ctx.config().max_repairs,
        ctx.call_observer(), check, ErrorCode::EmptyChain);
    PrerequisiteChain chain;
    chain.goal = goal;
    chain.pruned = r.record.value("pruned", std::vector<std::string>{});
    std::set<std::string> seen;
    for (const auto& p : r.record.at("prerequisites").get<std::vector<std::string>>()) {
        if (seen.insert(text::canonical_words(p)).second) {
            chain.prerequisites.push_back(p);
        } else {
            chain.pruned.push_back(p);
        }
    }
    return chain;
}

// --- candidates ----------------------------------------------------------------------------

namespace {

FieldSchema candidate_schema() {
    return FieldSchema{{
        FieldSpec::records("candidates",
                           {FieldSpec::text("name"), FieldSpec::text("overview"), FieldSpec::text("overlooked", false),
                            FieldSpec::list("impacts"), FieldSpec::enumeration("severity", {"Normal", "Critical"}, false),
                            FieldSpec::text("invalidates", false), FieldSpec::list("conflicts", 0, false)},
                           0, false),
    }};
}

std::string check_candidates(const Json& r) {
    for (const auto& row : r.value("candidates", Json::array())) {
        for (const auto& imp : row.at("impacts")) {
            if (!parse_impact(imp.get<std::string>())) {
                return "unknown impact category '" + imp.get<std::string>() +
                       "'; use Architecture, TechnologyChoice or CapabilityPriority";
            }
        }
    }
    return {};
}

std::vector<UURecord> candidates_from(const Json& record, Strategy strategy) {
    std::vector<UURecord> out;
    for (const auto& row : record.value("candidates", Json::array())) {
        UURecord u;
        u.name = row.at("name").get<std::string>();
        u.overview = row.at("overview").get<std::string>();
        u.overlooked_reason = row.value("overlooked", std::string{});
        u.strategy = strategy;
        for (const auto& imp : row.at("impacts")) u.impacts.insert(*parse_impact(imp.get<std::string>()));
        u.severity = row.value("severity", std::string("Normal")) == "Critical" ? Severity::Critical : Severity::Normal;
        u.invalidated_clause = row.value("invalidates", std::string{});
        u.conflicts_with = row.value("conflicts", std::vector<std::string>{});
        out.push_back(std::move(u));
    }
    return out;
}

bool quotes_problem(const std::string& problem, const std::string& clause) {
    const auto c = text::canonical_words(clause);
    return !c.empty() && (" " + text::canonical_words(problem) + " ").find(" " + c + " ") != std::string::npos;
}

} // namespace

std::vector<UURecord> derive_candidates(const StrategicBrief& brief, const std::vector<AnalogyOutcome>& analogies,
                                        const PrerequisiteChain& chain, const StageContext& ctx) {
    const auto schema = candidate_schema();
    std::vector<UURecord> all;

    std::vector<std::string> analogy_lines;
    for (const auto& a : analogies) {
        if (a.candidate) {
            analogy_lines.push_back(a.domain + ": " + a.candidate->source_mechanism + " -> " +
                                    a.candidate->mapped_solution);
        }
    }
    if (!analogy_lines.empty()) {
        const auto r = ctx.gateway().complete_structured(
            ctx.request("exploration.uu_analogy", "exploration.uu_analogy",
                        {{"problem_statement", brief.problem_statement},
                         {"baseline_solution", brief.baseline_solution},
                         {"analogies", bullet_list(analogy_lines)}}),
            schema, ctx.config().max_repairs, ctx.call_observer(), check_candidates);
        for (auto& u : candidates_from(r.record, Strategy::Analogy)) all.push_back(std::move(u));
    }
    const auto r = ctx.gateway().complete_structured(
        ctx.request("exploration.uu_reverse", "exploration.uu_reverse",
                    {{"problem_statement", brief.problem_statement},
                     {"baseline_solution", brief.baseline_solution},
                     {"chain", bullet_list(chain.prerequisites)}}),
        schema, ctx.config().max_repairs, ctx.call_observer(), check_candidates);
    for (auto& u : candidates_from(r.record, Strategy::ReverseThinking)) all.push_back(std::move(u));

    if (static_cast<int>(all.size()) > ctx.config().max_candidates) {
        all.resize(static_cast<std::size_t>(std::max(0, ctx.config().max_candidates)));
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i].id = "UU-" + std::to_string(i + 1);
        if (all[i].severity == Severity::Critical && !quotes_problem(brief.problem_statement, all[i].invalidated_clause)) {
            all[i].severity = Severity::Normal;
        }
    }
    return all;
}

// --- validation ---------------------------------------------------------------------------

namespace {

std::string component_label(Component c) {
    switch (c) {
    case Component::F: return "technical feasibility";
    case Component::I: return "implementation viability";
    case Component::C: return "contextual appropriateness";
    }
    return "?";
}

std::string validate_tag(Component c) {
    switch (c) {
    case Component::F: return "exploration.validate_f";
    case Component::I: return "exploration.validate_i";
    case Component::C: return "exploration.validate_c";
    }
    return "?";
}

} // namespace

CandidateValidation validate_candidate(const UURecord& candidate, const StageContext& ctx) {
    if (text::trim(candidate.name).empty() || text::trim(candidate.overview).empty()) {
        fail(ErrorCode::InvalidValue, "candidate needs a name and an overview");
    }
    CandidateValidation out;
    std::array<double, 3> score{kNoEvidenceScore, kNoEvidenceScore, kNoEvidenceScore};
    std::array<bool, 3> no_evidence{true, true, true};
    const std::string claim = candidate.name + ": " + candidate.overview;

    for (Component c : {Component::F, Component::I, Component::C}) {
        const auto idx = static_cast<std::size_t>(c);
        if (!ctx.search()) continue;
        ClaimCheck check;
        try {
            check = ctx.search()->verify_claim(claim, c, validate_tag(c), ctx.gateway(), ctx.search_observer(),
                                               ctx.call_observer(), ctx.config().max_repairs,
                                               render_constraints(ctx.directives(), ctx.phase()));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ProviderUnavailable || e.code() == ErrorCode::QuotaExceeded) continue;
            throw;
        }
        for (const auto& ev : check.evidence) out.evidence.push_back(ev);
        if (check.stance == Stance::NoEvidence) continue;
        no_evidence[idx] = false;
        if (check.stance == Stance::Contradicts) {
            score[idx] = kContradictedScore;
            continue;
        }
        const auto n = static_cast<long>(check.evidence.size());
        const FieldSchema schema{{FieldSpec::real("score", 0.0, 1.0), FieldSpec::integer("cite", 1, n)}};
        const auto r = ctx.gateway().complete_structured(
            ctx.request(validate_tag(c), "exploration.validate",
                        {{"name", candidate.name},
                         {"overview", candidate.overview},
                         {"component_name", component_label(c)},
                         {"evidence", render_evidence(check.evidence)}},
                        256),
            schema, ctx.config().max_repairs, ctx.call_observer());
        score[idx] = r.record.at("score").get<double>();
    }
    out.score = ValidationScore::from_components(score[0], score[1], score[2], no_evidence);
    return out;
}

// --- control ---------------------------------------------------------------------------------

bool names_candidate(const UURecord& a, const UURecord& b) {
    for (const auto& entry : a.conflicts_with) {
        if ((!b.name.empty() && text::contains_ci(entry, b.name)) || (!b.id.empty() && text::contains_ci(entry, b.id))) {
            return true;
        }
    }
    return false;
}

ExplorationControl decide_control(const std::vector<UURecord>& accepted) {
    ExplorationControl out;
    for (const auto& u : accepted) {
        if (u.severity == Severity::Critical) {
            out.kind = ExplorationControlKind::ResetToDiscovery;
            out.uu_ids = {u.id};
            out.reason = u.name + " invalidates \"" + u.invalidated_clause + "\"";
            return out;
        }
    }
    std::vector<bool> conflicting(accepted.size(), false);
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        for (std::size_t j = i + 1; j < accepted.size(); ++j) {
            if (names_candidate(accepted[i], accepted[j]) || names_candidate(accepted[j], accepted[i])) {
                conflicting[i] = conflicting[j] = true;
            }
        }
    }
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        if (conflicting[i]) out.uu_ids.push_back(accepted[i].id);
    }
    if (out.uu_ids.size() >= 2) {
        out.kind = ExplorationControlKind::DeferToIntegration;
        out.reason = "conflicting factors: " + text::join(out.uu_ids, ", ");
    } else {
        out.uu_ids.clear();
    }
    return out;
}

// --- pipeline --------------------------------------------------------------------------------

ExplorationReport run_exploration(const EnablerStory& story, const StrategicBrief& brief, StageContext& ctx) {
    ctx.set_phase(Phase::Exploration);
    const auto gp = ctx.substage("abstract_problem", [&] { return abstract_problem(brief, ctx); });
    const auto analogies =
        ctx.substage("map_analogies", [&] { return map_analogies(gp, ctx.config().analogy_domains, ctx); });
    const std::string goal = text::trim(story.expected_result).empty() ? brief.problem_statement : story.expected_result;
    const auto chain = ctx.substage("reverse_chain", [&] { return reverse_chain(goal, ctx); });
    auto candidates = ctx.substage("derive_candidates", [&] { return derive_candidates(brief, analogies, chain, ctx); });
    candidates = ctx.substage("validate_candidates", [&] {
        auto validated = candidates;
        for (auto& c : validated) {
            auto v = validate_candidate(c, ctx);
            c.validation = v.score;
            c.evidence = std::move(v.evidence);
        }
        return validated;
    });
    return ctx.substage("filter_candidates", [&] {
        ExplorationReport report;
        for (auto c : candidates) {
            c.filter_verdict = apply_uu_filter(c, story, ctx.config().thresholds);
            if (c.filter_verdict->accepted()) {
                report.uus.push_back(std::move(c));
            } else {
                report.rejected.push_back(std::move(c));
            }
        }
        report.control = decide_control(report.uus);
        return report;
    });
}

} // namespace u2f
