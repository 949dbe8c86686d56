#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "transition_oracle.hpp"
#include "u2f/replay.hpp"

using namespace u2f;
using namespace u2f::testing;

TEST(Step, DefinedEdges) {
    RunConfig c;
    PipelineState s;
    s.phase = Phase::Exploration;
    auto n = step(s, {SignalKind::ResetToDiscovery, "", {}}, c);
    EXPECT_EQ(n.phase, Phase::Discovery);
    EXPECT_EQ(n.reset_count, 1);
    s.reset_count = c.max_resets;
    n = step(s, {SignalKind::ResetToDiscovery, "", {}}, c);
    EXPECT_EQ(n.phase, Phase::Failed);
    EXPECT_EQ(n.failure_reason, "reset cap");
}

TEST(Step, UndefinedEdgeIsIllegal) {
    PipelineState s;
    try {
        step(s, {SignalKind::Done, "", {}}, RunConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IllegalTransition);
        EXPECT_NE(std::string(e.what()).find("(Discovery, Done)"), std::string::npos);
    }
}

TEST(Step, TerminalStateRejected) {
    PipelineState s;
    s.phase = Phase::Done;
    EXPECT_THROW(step(s, {}, RunConfig{}), Error);
}

TEST(Step, RandomisedAgainstTable) {
    std::mt19937 rng(7);
    const Phase phases[] = {Phase::Discovery, Phase::Exploration, Phase::Integration, Phase::Done, Phase::Failed};
    for (int trial = 0; trial < 5000; ++trial) {
        RunConfig c;
        c.max_resets = static_cast<int>(rng() % 5);
        c.max_deepens = static_cast<int>(rng() % 4);
        if (rng() % 4 == 0) c.enabled_stages.erase(Phase::Exploration);
        if (rng() % 4 == 0) c.enabled_stages.erase(Phase::Integration);
        PipelineState s;
        s.phase = phases[rng() % 5];
        s.reset_count = static_cast<int>(rng() % (c.max_resets + 1));
        s.deepen_count = static_cast<int>(rng() % (c.max_deepens + 1));
        const auto k = kAllSignals[rng() % kAllSignals.size()];
        const auto expected = oracle(s, k, c);
        const PipelineState before = s;
        try {
            const auto got = step(s, {k, "", {}}, c);
            ASSERT_TRUE(expected) << to_string(s.phase) << " " << to_string(k);
            EXPECT_EQ(got, *expected);
        } catch (const Error& e) {
            ASSERT_FALSE(expected) << to_string(s.phase) << " " << to_string(k) << ": " << e.what();
            EXPECT_EQ(e.code(), s.terminal() ? ErrorCode::TerminalState : ErrorCode::IllegalTransition);
        }
        EXPECT_EQ(s, before);
    }
}

TEST(Directive, AppliedAndRejectedWhenTerminal) {
    PipelineState s;
    HumanDirective d{DirectiveKind::Taboo, "no cloud dependencies", TargetPhase::All, "", false};
    s = apply_directive(s, d);
    ASSERT_EQ(s.directives.size(), 1u);
    s.phase = Phase::Done;
    try {
        apply_directive(s, d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TerminalState);
    }
}

TEST(Feedback, CriticalResetCapEndsFailed) {
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("exploration.uu_analogy", {kCriticalCandidates});
    const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
    EXPECT_EQ(out.result.status, Phase::Failed);
    EXPECT_EQ(out.result.failure_reason, "reset cap");
    EXPECT_EQ(out.result.reset_count, 3);
    EXPECT_EQ(out.result.phase_sequence, phases({"Discovery", "Exploration", "Discovery", "Exploration", "Discovery",
                                                 "Exploration", "Discovery", "Exploration"}));
    EXPECT_EQ(replay(out.trace), out.result);
}

TEST(Feedback, CriticalResetThenRecovers) {
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("exploration.uu_analogy", {kCriticalCandidates, golden_script()->complete(
        ChatRequest("exploration.uu_analogy", "s", "u")).text});
    const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
    ASSERT_EQ(out.result.status, Phase::Done) << out.result.failure_reason;
    EXPECT_EQ(out.result.phase_sequence, phases({"Discovery", "Exploration", "Discovery", "Exploration", "Integration"}));
    EXPECT_EQ(out.result.reset_count, 1);
    // The reset reason reaches every later prompt.
    bool seen = false;
    for (const auto& e : out.trace.events) {
        if (e.kind != EventKind::ProviderCall) continue;
        const auto sys = e.payload.at("request").at("system_prompt").get<std::string>();
        if (sys.find("Strategic reset: Covert capture liability") != std::string::npos) seen = true;
    }
    EXPECT_TRUE(seen);
    EXPECT_EQ(replay(out.trace), out.result);
}

TEST(Feedback, ConflictingCandidatesDefer) {
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("exploration.uu_analogy", {kConflictingCandidates});
    const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
    ASSERT_EQ(out.result.status, Phase::Done) << out.result.failure_reason;
    EXPECT_EQ(out.result.phase_sequence, phases({"Discovery", "Exploration", "Integration"}));
    bool deferred = false;
    for (const auto& e : out.trace.events) {
        if (e.kind == EventKind::ControlSignal &&
            e.payload.at("signal").at("kind") == "DeferToIntegration") {
            deferred = true;
            EXPECT_EQ(e.payload.at("signal").at("uu_ids").size(), 2u);
        }
    }
    EXPECT_TRUE(deferred);
}

TEST(Feedback, IntegrationDemandsDeeperExploration) {
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("integration.plan", {plan_with_control("deepen", "insufficient UU depth"),
                                  plan_with_control("done", "addressed")});
    const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
    ASSERT_EQ(out.result.status, Phase::Done) << out.result.failure_reason;
    EXPECT_EQ(out.result.phase_sequence, phases({"Discovery", "Exploration", "Integration", "Exploration", "Integration"}));
    EXPECT_EQ(out.result.deepen_count, 1);
    EXPECT_EQ(replay(out.trace), out.result);
}

TEST(Feedback, DeepenCapEndsFailed) {
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("integration.plan", {plan_with_control("deepen", "insufficient UU depth")});
    const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
    EXPECT_EQ(out.result.status, Phase::Failed);
    EXPECT_EQ(out.result.failure_reason, "deepen cap");
    EXPECT_EQ(out.result.deepen_count, 2);
}

TEST(Feedback, IntegrationStrategicReset) {
    auto chat = std::make_shared<OverrideProvider>();
    chat->on("integration.plan", {plan_with_control("reset", "initial premise flawed"),
                                  plan_with_control("done", "addressed")});
    const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
    ASSERT_EQ(out.result.status, Phase::Done) << out.result.failure_reason;
    EXPECT_EQ(out.result.phase_sequence,
              phases({"Discovery", "Exploration", "Integration", "Discovery", "Exploration", "Integration"}));
    EXPECT_EQ(out.result.reset_count, 1);
}

TEST(RunCase, StageErrorIsAttributed) {
    auto chat = golden_script();
    chat->fail_stage("discovery.baseline", ErrorCode::Timeout);
    const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
    EXPECT_EQ(out.result.status, Phase::Failed);
    ASSERT_TRUE(out.result.error);
    EXPECT_EQ(out.result.error->at("code"), "Timeout");
    EXPECT_EQ(out.result.error->at("stage"), "generate_baseline");
    EXPECT_EQ(out.result.deliverable, "None");
    EXPECT_EQ(count_events(out.trace, EventKind::Error), 1);
}

TEST(RunCase, TraceSeqIsGapless) {
    const auto out = run_case(golden_story(), RunConfig{}, golden_services());
    for (std::size_t i = 0; i < out.trace.events.size(); ++i) EXPECT_EQ(out.trace.events[i].seq, (long long)i + 1);
}

TEST(RunCase, BaselineModesMakeOneCall) {
    const std::pair<Mode, std::string_view> modes[] = {
        {Mode::ZeroShot, kZeroShotMarker}, {Mode::RoleBased, kRoleBasedMarker}, {Mode::SEAP, kSeapMarker}};
    for (const auto& [mode, marker] : modes) {
        RunConfig c;
        c.mode = mode;
        const auto out = run_case(golden_story(), c, golden_services());
        ASSERT_EQ(out.result.status, Phase::Done) << to_string(mode);
        EXPECT_EQ(out.result.deliverable, "BaselineSolution");
        EXPECT_EQ(count_events(out.trace, EventKind::ProviderCall), 1);
        for (const auto& e : out.trace.events) {
            if (e.kind != EventKind::ProviderCall) continue;
            const auto req = e.payload.at("request");
            const auto all = req.at("system_prompt").get<std::string>() + req.at("user_prompt").get<std::string>();
            EXPECT_NE(all.find(marker), std::string::npos) << to_string(mode);
        }
        for (const auto& p : out.result.phase_sequence) EXPECT_EQ(p, "Baseline");
    }
}

TEST(RunCase, FreeTextFeedbackRerunsStageOnce) {
    ScriptedChannel channel;
    channel.at("refactor_solution", {DirectiveKind::FreeTextFeedback, "too complex, is there a lighter one?",
                                     TargetPhase::Integration, "", false});
    RunOptions opts;
    opts.channel = &channel;
    const auto out = run_case(golden_story(), RunConfig{}, golden_services(), opts);
    ASSERT_EQ(out.result.status, Phase::Done);
    int starts = 0;
    bool rerun_prompt = false;
    for (const auto& e : out.trace.events) {
        if (e.kind == EventKind::StageStart && e.payload.value("stage", "") == "refactor_solution") ++starts;
        if (e.kind == EventKind::ProviderCall && e.payload.at("request").at("stage_tag") == "integration.refactor" &&
            e.payload.at("request").at("system_prompt").get<std::string>().find("lighter one") != std::string::npos)
            rerun_prompt = true;
    }
    EXPECT_EQ(starts, 2);
    EXPECT_TRUE(rerun_prompt);
    EXPECT_EQ(replay(out.trace), out.result);
}

TEST(RunCase, TabooReachesEveryLaterPrompt) {
    ScriptedChannel channel;
    channel.at("refine_problem", {DirectiveKind::Taboo, "no cloud dependencies", TargetPhase::All, "", false});
    RunOptions opts;
    opts.channel = &channel;
    const auto out = run_case(golden_story(), RunConfig{}, golden_services(), opts);
    bool after = false;
    for (const auto& e : out.trace.events) {
        if (e.kind == EventKind::Directive) after = true;
        if (after && e.kind == EventKind::ProviderCall) {
            EXPECT_NE(e.payload.at("request").at("system_prompt").get<std::string>().find("no cloud dependencies"),
                      std::string::npos)
                << e.payload.at("request").at("stage_tag");
        }
    }
    EXPECT_TRUE(after);
}

TEST(Replay, TamperedPayloadDiverges) {
    auto out = run_case(golden_story(), RunConfig{}, golden_services());
    auto& e = out.trace.events.at(10);
    e.payload["tampered"] = true;
    try {
        replay(out.trace);
        FAIL();
    } catch (const TraceDivergenceError& err) {
        EXPECT_EQ(err.seq(), e.seq);
    }
}

TEST(Replay, ResignedTamperedPromptDiverges) {
    auto out = run_case(golden_story(), RunConfig{}, golden_services());
    for (auto& e : out.trace.events) {
        if (e.kind == EventKind::ProviderCall && e.payload.at("request").at("stage_tag") == "discovery.baseline") {
            e.payload["request"]["user_prompt"] = "something else";
            e.digest = event_digest(e.kind, e.payload);
            try {
                replay(out.trace);
                FAIL();
            } catch (const TraceDivergenceError& err) {
                EXPECT_EQ(err.seq(), e.seq);
            }
            return;
        }
    }
    FAIL() << "no baseline call";
}

TEST(Replay, SearchDisabledDiverges) {
    const auto out = run_case(golden_story(), RunConfig{}, golden_services());
    RunConfig off = out.trace.config_snapshot;
    off.search_enabled = false;
    EXPECT_THROW(replay(out.trace, {off}), TraceDivergenceError);
}

TEST(Replay, TraceFileRoundTrip) {
    const auto path = ::testing::TempDir() + "golden.trace.jsonl";
    RunOptions opts;
    opts.trace_path = path;
    const auto out = run_case(golden_story(), RunConfig{}, golden_services(), opts);
    const auto loaded = read_trace_file(path);
    EXPECT_EQ(loaded.events, out.trace.events);
    EXPECT_EQ(canonical_result(replay(loaded)), canonical_result(out.result));
}

TEST(Termination, RandomRunsStayWithinBound) {
    std::mt19937 rng(11);
    for (int run = 0; run < 200; ++run) {
        RunConfig c;
        c.max_resets = static_cast<int>(rng() % 4);
        c.max_deepens = static_cast<int>(rng() % 3);
        c.parallel_analogies = false;
        auto chat = std::make_shared<OverrideProvider>();
        std::vector<std::string> uus, plans;
        for (int i = 0; i < 12; ++i) {
            uus.push_back(rng() % 3 == 0 ? kCriticalCandidates : kConflictingCandidates);
            const char* ctl[] = {"done", "deepen", "reset"};
            plans.push_back(plan_with_control(ctl[rng() % 3], "r"));
        }
        chat->on("exploration.uu_analogy", uus).on("integration.plan", plans);
        const auto out = run_case(golden_story(), c, services_with(chat));
        ASSERT_TRUE(out.result.status == Phase::Done || out.result.status == Phase::Failed);
        std::map<std::string, int> per;
        for (const auto& p : out.result.phase_sequence) ++per[p];
        for (const auto& [p, n] : per) EXPECT_LE(n, max_phase_executions(c)) << p;
    }
}
