#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "support.hpp"
#include "u2f/discovery.hpp"
#include "u2f/exploration.hpp"
#include "u2f/integration.hpp"
#include "u2f/text.hpp"

using namespace u2f;
using namespace u2f::testing;

// --- structured output --------------------------------------------------------

TEST(Structured, ParsesTypedSections) {
    const FieldSchema schema{{FieldSpec::text("name"), FieldSpec::integer("score", 1, 5),
                              FieldSpec::enumeration("kind", {"Alpha", "Beta"}), FieldSpec::list("items", 1),
                              FieldSpec::text("note", false)}};
    const auto r = parse_structured("=== name ===\nwidget\n=== score ===\n4\n=== kind ===\nbeta\n=== items ===\n- a\n* b",
                                    schema);
    ASSERT_TRUE(r.record) << r.problem;
    EXPECT_EQ(r.record->at("score"), 4);
    EXPECT_EQ(r.record->at("kind"), "Beta");
    EXPECT_EQ(r.record->at("items"), (Json{"a", "b"}));
}

TEST(Structured, ReportsProblems) {
    const FieldSchema schema{{FieldSpec::integer("score", 1, 5), FieldSpec::list("items", 1)}};
    EXPECT_FALSE(parse_structured("=== score ===\n9\n=== items ===\n- a", schema).record);
    EXPECT_FALSE(parse_structured("=== score ===\n3", schema).record);
    EXPECT_FALSE(parse_structured("no sections", schema).problem.empty());
}

TEST(Structured, Records) {
    const FieldSchema schema{{FieldSpec::records("rows", {FieldSpec::text("a"), FieldSpec::integer("b", 0, 9)}, 1)}};
    const auto r = parse_structured("=== rows ===\n- a: x | b: 3\n- a: y | b: 4", schema);
    ASSERT_TRUE(r.record) << r.problem;
    EXPECT_EQ(r.record->at("rows")[1].at("b"), 4);
}

// --- gateway ------------------------------------------------------------------

TEST(Gateway, RepairThenSucceed) {
    auto mock = std::make_shared<ScriptedMockProvider>();
    mock->on_stage("t.stage", "garbage");
    mock->on_contains("t.stage", std::string(kRepairMarker), "=== answer ===\nfine");
    Gateway g(mock);
    const auto r = g.complete_structured(ChatRequest("t.stage", "sys", "user"), FieldSchema{{FieldSpec::text("answer")}}, 1);
    EXPECT_EQ(r.repairs, 1);
    EXPECT_EQ(r.record.at("answer"), "fine");
}

TEST(Gateway, RepairBudgetExhausted) {
    auto mock = std::make_shared<ScriptedMockProvider>();
    mock->on_stage("t.stage", "garbage");
    Gateway g(mock);
    try {
        g.complete_structured(ChatRequest("t.stage", "sys", "user"), FieldSchema{{FieldSpec::text("answer")}}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    }
    EXPECT_EQ(mock->call_count(), 2u);
}

TEST(Gateway, DeadlineWithFakeClock) {
    FakeClock clock;
    std::atomic<bool> release{false};
    auto slow = std::make_shared<LambdaProvider>([&](const ChatRequest&) {
        while (!release) std::this_thread::sleep_for(Millis(1));
        return ChatResponse{"late", "slow", 0, {}};
    });
    GatewayConfig cfg;
    cfg.deadline = Millis(1000);
    Gateway g(slow, cfg, &clock);
    try {
        g.complete(ChatRequest("t.stage", "s", "u"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Timeout);
    }
    release = true;
    EXPECT_GE(clock.elapsed(), Millis(1000));
}

TEST(Gateway, RateLimitHonoursRetryAfter) {
    FakeClock clock;
    int calls = 0;
    auto limited = std::make_shared<LambdaProvider>(
        [&](const ChatRequest&) -> ChatResponse {
            if (++calls == 1) throw RateLimitedError(Millis(750), "slow down");
            return {"ok", "l", 0, {}};
        },
        false);
    Gateway g(limited, {}, &clock);
    EXPECT_EQ(g.complete(ChatRequest("t.stage", "s", "u")).text, "ok");
    EXPECT_EQ(calls, 2);
    EXPECT_GE(clock.elapsed(), Millis(750));
}

TEST(Gateway, RequestNeedsStageTag) { EXPECT_THROW(ChatRequest("", "s", "u"), Error); }

// --- mock provider ------------------------------------------------------------

TEST(Mock, LookupOrder) {
    ScriptedMockProvider m;
    m.on_stage("s", "fallback").on_contains("s", "needle", "contained").on_prompt("s", "exact prompt needle", "exact");
    EXPECT_EQ(m.complete(ChatRequest("s", "sys", "exact prompt needle")).text, "exact");
    EXPECT_EQ(m.complete(ChatRequest("s", "sys", "a needle here")).text, "contained");
    EXPECT_EQ(m.complete(ChatRequest("s", "sys", "other")).text, "fallback");
    try {
        m.complete(ChatRequest("unknown", "sys", "x"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingScript);
    }
}

TEST(Mock, ScriptedErrors) {
    ScriptedMockProvider m;
    m.fail_stage("s", ErrorCode::ProviderUnavailable);
    try {
        m.complete(ChatRequest("s", "sys", "x"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ProviderUnavailable);
    }
}

// --- search augmentor ---------------------------------------------------------

TEST(Search, CachesNormalizedQueries) {
    auto fixture = std::make_shared<FixtureSearchProvider>();
    fixture->add("shutter law", {{"src", "Some markets mandate a shutter sound.", "2025-01-01"}});
    SearchAugmentor aug(fixture);
    int cached = 0;
    const SearchObserver obs = [&](const SearchQuery&, const std::vector<EvidenceItem>*, const Error*, bool c) {
        cached += c;
    };
    EXPECT_EQ(aug.search({"Shutter   LAW", SearchPurpose::ValidateC, "test"}, obs).size(), 1u);
    EXPECT_EQ(aug.search({"shutter law", SearchPurpose::ValidateC, "test"}, obs).size(), 1u);
    EXPECT_EQ(fixture->hit_count(), 1);
    EXPECT_EQ(cached, 1);
}

TEST(Search, QueryNeedsIssuer) { EXPECT_THROW(SearchQuery("q", SearchPurpose::ValidateF, ""), Error); }

TEST(Search, QuotaErrorSurfaces) {
    auto fixture = std::make_shared<FixtureSearchProvider>();
    fixture->set_quota(0);
    SearchAugmentor aug(fixture);
    try {
        aug.search({"anything", SearchPurpose::ProbeWeakness, "test"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::QuotaExceeded);
    }
}

TEST(Search, UnavailableProviderTakesNoEvidencePath) {
    auto search = golden_search();
    search->set_available(false);
    RunServices s;
    s.chat = golden_script();
    s.search = search;
    const auto out = run_case(golden_story(), RunConfig{}, s);
    for (const auto& u : all_candidates(out.trace)) {
        for (auto c : {Component::F, Component::I, Component::C}) EXPECT_TRUE(u.validation->no_evidence(c));
    }
}

// --- agents -------------------------------------------------------------------

namespace {

struct Harness {
    explicit Harness(std::shared_ptr<ChatProvider> chat) : gateway(std::move(chat)), aug(golden_search()) {}
    StageContext ctx() { return StageContext(gateway, &aug, config); }
    Gateway gateway;
    SearchAugmentor aug;
    RunConfig config;
};

} // namespace

TEST(Discovery, OverlongProblemIsSchemaViolation) {
    std::string long_text = "=== problem_statement ===\n";
    for (int i = 0; i < 80; ++i) long_text += "word ";
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("discovery.refine", {long_text});
    Harness h(chat);
    try {
        refine_problem(golden_story(), h.ctx());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    }
}

TEST(Discovery, GoldenBrief) {
    Harness h(golden_script());
    auto ctx = h.ctx();
    const auto brief = run_discovery(golden_story(), ctx);
    EXPECT_LE(text::word_count(brief.problem_statement), kMaxProblemWords);
    EXPECT_FALSE(brief.defect_analysis.empty());
    EXPECT_TRUE(text::contains_ci(brief.baseline_solution, "shutter"));
}

TEST(Exploration, ConcreteTermsDetected) {
    const auto stop = abstraction_stopwords(PromptLibrary::defaults());
    EXPECT_FALSE(concrete_terms("The database and the API", stop).empty());
    EXPECT_TRUE(concrete_terms("A signal must stay imperceptible to bystanders", stop).empty());
}

TEST(Exploration, OneOutcomePerDomainInOrder) {
    Harness h(golden_script());
    auto ctx = h.ctx();
    const auto brief = run_discovery(golden_story(), ctx);
    const auto gp = abstract_problem(brief, ctx);
    const std::vector<std::string> domains{"Physics", "Economics", "Biology"};
    const auto out = map_analogies(gp, domains, ctx);
    ASSERT_EQ(out.size(), 3u);
    for (std::size_t i = 0; i < domains.size(); ++i) EXPECT_EQ(out[i].domain, domains[i]);
    EXPECT_TRUE(out[1].no_analogy());  // the golden script has no Economics analogy
    EXPECT_FALSE(out[0].no_analogy());
}

TEST(Exploration, ControlDecision) {
    UURecord a, b, c;
    a.id = "UU-1";
    a.name = "Alpha";
    b.id = "UU-2";
    b.name = "Beta";
    b.conflicts_with = {"Alpha: contradicts"};
    c.id = "UU-3";
    c.name = "Gamma";
    c.severity = Severity::Critical;
    EXPECT_EQ(decide_control({a}).kind, ExplorationControlKind::Continue);
    EXPECT_EQ(decide_control({a, b}).kind, ExplorationControlKind::DeferToIntegration);
    const auto reset = decide_control({a, b, c});
    EXPECT_EQ(reset.kind, ExplorationControlKind::ResetToDiscovery);
    EXPECT_EQ(reset.uu_ids, std::vector<std::string>{"UU-3"});
}

TEST(Exploration, ContradictedComponentScoresZero) {
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("search.stance", {"=== stance ===\nContradicts"});
    Harness h(chat);
    auto ctx = h.ctx();
    UURecord u;
    u.name = "Regional shutter-sound mandates";
    u.overview = "Several markets require an audible shutter";
    const auto v = validate_candidate(u, ctx);
    bool any_zero = false;
    for (auto c : {Component::F, Component::I, Component::C}) {
        if (!v.score.no_evidence(c)) {
            EXPECT_EQ(v.score.component(c), kContradictedScore);
            any_zero = true;
        }
    }
    EXPECT_TRUE(any_zero);
}

TEST(Integration, GoldenSolutionComplete) {
    Harness h(golden_script());
    auto ctx = h.ctx();
    const auto story = golden_story();
    const auto brief = run_discovery(story, ctx);
    const auto report = run_exploration(story, brief, ctx);
    const auto out = run_integration(brief, report.uus, ctx);
    EXPECT_TRUE(out.solution.complete()) << text::join(out.solution.missing_parts(), ",");
    EXPECT_EQ(out.control, IntegrationControl::Done);
    EXPECT_EQ(out.conflicts.entries.size(), report.uus.size());
}

TEST(Integration, NoUUsSkipsConflictMapping) {
    auto chat = std::make_shared<OverrideProvider>();
    Harness h(chat);
    auto ctx = h.ctx();
    const auto brief = run_discovery(golden_story(), ctx);
    const auto out = run_integration(brief, {}, ctx);
    EXPECT_TRUE(out.conflicts.entries.empty());
    EXPECT_EQ(chat->calls("integration.conflicts"), 0u);
}
