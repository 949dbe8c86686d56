// Acceptance checks: one PASS/FAIL line per criterion; exit status 1 if any
// check fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "dataset_support.hpp"
#include "metric_oracles.hpp"
#include "support.hpp"
#include "transition_oracle.hpp"
#include "u2f/eval.hpp"
#include "u2f/replay.hpp"
#include "u2f/robustness.hpp"

using namespace u2f;
using namespace u2f::testing;

namespace {

/// Thrown by require(); carries the first violated expectation.
struct Violation {
    std::string what;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Violation{what};
}

std::string join_seq(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ",") + s.substr(0, 1);
    return out;
}

// --- 1 --------------------------------------------------------------------------

std::string state_machine_totality() {
    const auto started = std::chrono::steady_clock::now();
    std::mt19937 rng(2024);
    const Phase all_phases[] = {Phase::Discovery, Phase::Exploration, Phase::Integration, Phase::Done, Phase::Failed};
    for (int trial = 0; trial < 10000; ++trial) {
        RunConfig c;
        c.max_resets = static_cast<int>(rng() % 5);
        c.max_deepens = static_cast<int>(rng() % 4);
        if (rng() % 4 == 0) c.enabled_stages.erase(Phase::Exploration);
        if (rng() % 4 == 0) c.enabled_stages.erase(Phase::Integration);
        PipelineState s;
        s.phase = all_phases[rng() % 5];
        s.reset_count = static_cast<int>(rng() % (c.max_resets + 1));
        s.deepen_count = static_cast<int>(rng() % (c.max_deepens + 1));
        const auto k = kAllSignals[rng() % kAllSignals.size()];
        const auto expected = oracle(s, k, c);
        try {
            const auto got = step(s, {k, "", {}}, c);
            require(expected && got == *expected, "step(" + to_string(s.phase) + ", " + to_string(k) + ") disagrees");
        } catch (const Error& e) {
            require(!expected, "step(" + to_string(s.phase) + ", " + to_string(k) + ") threw " + e.what());
            require(e.code() == (s.terminal() ? ErrorCode::TerminalState : ErrorCode::IllegalTransition),
                    "wrong error code for an undefined edge");
        }
    }

    for (int run = 0; run < 1000; ++run) {
        RunConfig c;
        c.max_resets = static_cast<int>(rng() % 4);
        c.max_deepens = static_cast<int>(rng() % 3);
        c.parallel_analogies = false;
        auto chat = std::make_shared<OverrideProvider>();
        std::vector<std::string> uus, plans;
        for (int i = 0; i < 12; ++i) {
            const auto pick = rng() % 3;
            uus.push_back(pick == 0 ? kCriticalCandidates : pick == 1 ? kConflictingCandidates
                                                                      : golden_script()->complete(ChatRequest(
                                                                            "exploration.uu_analogy", "s", "u")).text);
            const char* ctl[] = {"done", "deepen", "reset"};
            plans.push_back(plan_with_control(ctl[rng() % 3], "r"));
        }
        chat->on("exploration.uu_analogy", uus).on("integration.plan", plans);
        const auto out = run_case(golden_story(), c, services_with(chat));
        require(out.result.status == Phase::Done || out.result.status == Phase::Failed, "run did not terminate");
        std::map<std::string, int> per;
        for (const auto& p : out.result.phase_sequence) ++per[p];
        for (const auto& [p, n] : per) {
            require(n <= max_phase_executions(c), "run " + std::to_string(run) + " executed " + p + " " +
                                                      std::to_string(n) + " times");
        }
    }
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    require(secs < 60.0, "took " + std::to_string(secs) + " s");
    std::ostringstream note;
    note.precision(1);
    note << std::fixed << "10000 steps, 1000 runs in " << secs << " s";
    return note.str();
}

// --- 2 --------------------------------------------------------------------------

std::string golden_trace() {
    const auto path = std::filesystem::temp_directory_path() / "u2f_acceptance_golden.trace.jsonl";
    RunOptions opts;
    opts.trace_path = path.string();
    const auto out = run_case(golden_story(), RunConfig{}, golden_services(), opts);
    require(out.result.status == Phase::Done, "golden run ended " + to_string(out.result.status));
    require(out.result.phase_sequence == phases({"Discovery", "Exploration", "Integration"}),
            "sequence " + join_seq(out.result.phase_sequence));
    require(canonical_result(replay(out.trace)) == canonical_result(out.result), "in-memory replay differs");
    require(canonical_result(replay(read_trace_file(path.string()))) == canonical_result(out.result),
            "replay from file differs");
    return "D,E,I; replay identical";
}

// --- 3 --------------------------------------------------------------------------

std::string feedback_edges() {
    const auto golden_uus = golden_script()->complete(ChatRequest("exploration.uu_analogy", "s", "u")).text;
    struct Case {
        const char* edge;
        std::function<void(OverrideProvider&)> setup;
        Phase status;
        std::vector<std::string> sequence;
    };
    const std::vector<Case> cases{
        {"Exploration->Discovery",
         [&](OverrideProvider& p) { p.on("exploration.uu_analogy", {kCriticalCandidates, golden_uus}); },
         Phase::Done, phases({"Discovery", "Exploration", "Discovery", "Exploration", "Integration"})},
        {"Exploration->Integration (defer)",
         [](OverrideProvider& p) { p.on("exploration.uu_analogy", {kConflictingCandidates}); }, Phase::Done,
         phases({"Discovery", "Exploration", "Integration"})},
        {"Integration->Exploration",
         [](OverrideProvider& p) {
             p.on("integration.plan", {plan_with_control("deepen", "shallow"), plan_with_control("done", "ok")});
         },
         Phase::Done, phases({"Discovery", "Exploration", "Integration", "Exploration", "Integration"})},
        {"Integration->Discovery",
         [](OverrideProvider& p) {
             p.on("integration.plan", {plan_with_control("reset", "premise flawed"), plan_with_control("done", "ok")});
         },
         Phase::Done, phases({"Discovery", "Exploration", "Integration", "Discovery", "Exploration", "Integration"})},
        {"reset cap", [](OverrideProvider& p) { p.on("exploration.uu_analogy", {kCriticalCandidates}); }, Phase::Failed,
         phases({"Discovery", "Exploration", "Discovery", "Exploration", "Discovery", "Exploration", "Discovery",
                 "Exploration"})},
    };
    for (const auto& c : cases) {
        auto chat = std::make_shared<OverrideProvider>();
        c.setup(*chat);
        const auto out = run_case(golden_story(), RunConfig{}, services_with(chat));
        require(out.result.status == c.status, std::string(c.edge) + ": ended " + to_string(out.result.status));
        require(out.result.phase_sequence == c.sequence,
                std::string(c.edge) + ": sequence " + join_seq(out.result.phase_sequence));
    }
    bool deferred = false;
    {
        auto chat = std::make_shared<OverrideProvider>();
        chat->on("exploration.uu_analogy", {kConflictingCandidates});
        for (const auto& e : run_case(golden_story(), RunConfig{}, services_with(chat)).trace.events) {
            deferred |= e.kind == EventKind::ControlSignal && e.payload.at("signal").at("kind") == "DeferToIntegration";
        }
    }
    require(deferred, "no DeferToIntegration signal recorded");
    return "4 edges exact; reset cap Failed with D,E,D,E,D,E,D,E";
}

// --- 4 --------------------------------------------------------------------------

std::string uu_filter() {
    std::ifstream in(fixture("uu_filter/cases.json"));
    const auto cases = Json::parse(in);
    const auto story = read_story_file(fixture(cases.at("story").get<std::string>())).at(0);
    int accepted = 0, rejected = 0;
    for (const auto& c : cases.at("cases")) {
        const auto v = apply_uu_filter(c.at("candidate").get<UURecord>(), story);
        const auto& e = c.at("expected");
        const auto name = c.at("name").get<std::string>();
        require(v.evidence_absence == e.at("evidence_absence").get<bool>() &&
                    v.discovery_triggering == e.at("discovery_triggering").get<bool>() &&
                    v.solution_space_impact == e.at("solution_space_impact").get<bool>() &&
                    v.non_triviality == e.at("non_triviality").get<bool>(),
                name + ": flags differ");
        (v.accepted() ? accepted : rejected)++;
    }
    require(accepted == 5 && rejected == 3,
            std::to_string(accepted) + " accepted / " + std::to_string(rejected) + " rejected");

    // Verbatim corpus text, whatever its other merits, is never a UU.
    text::SplitMix64 rng(17);
    for (int i = 0; i < 200; ++i) {
        const auto& artifact = story.artifact_corpus[rng.below(story.artifact_corpus.size())];
        auto words = text::words(artifact);
        const auto from = rng.below(words.size());
        const auto len = 1 + rng.below(words.size() - from);
        UURecord c;
        c.name = "copy";
        c.overview = text::join({words.begin() + static_cast<long>(from), words.begin() + static_cast<long>(from + len)}, " ");
        c.overlooked_reason = "r";
        c.strategy = Strategy::Analogy;
        c.impacts = {ImpactCategory::Architecture};
        c.validation = ValidationScore::from_components(1, 1, 1);
        const auto v = apply_uu_filter(c, story);
        require(!v.evidence_absence && !v.accepted(), "verbatim '" + c.overview + "' accepted");
    }
    return "5 accept / 3 reject; 200 verbatim excerpts rejected";
}

// --- 5 --------------------------------------------------------------------------

std::string metric_oracles() {
    HashEmbedder hash;
    text::SplitMix64 rng(99);
    for (int i = 0; i < 100; ++i) {
        std::string s;
        const auto n = 1 + rng.below(30);
        for (std::size_t w = 0; w < n; ++w) s += "t" + std::to_string(rng.below(1000)) + " ";
        require(semantic_novelty(s, s, hash) == 0.0, "novelty(a, a) != 0 for '" + s + "'");
    }
    TableEmbedder table(2);
    table.set("a", {1, 1}).set("b", {1, 0});
    require(std::abs(semantic_novelty("a", "b", table) - (1 - 1 / std::sqrt(2.0))) < 1e-9, "hand-computed novelty");

    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 3 + rng.below(40);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(1 + rng.below(5));
            y[i] = static_cast<double>(1 + rng.below(5)) + (rng.below(2) ? rng.uniform() : 0.0);
        }
        x[0] = 1, x[1] = 5, y[0] = 0, y[1] = 9;
        require(std::abs(pearson(x, y) - oracle_pearson(x, y)) < 1e-9, "pearson");
        require(std::abs(spearman(x, y) - oracle_pearson(oracle_ranks(x), oracle_ranks(y))) < 1e-9, "spearman");

        const std::size_t items = 2 + rng.below(25), cats = 2 + rng.below(4);
        const int raters = 2 + static_cast<int>(rng.below(6));
        std::vector<std::vector<int>> m(items, std::vector<int>(cats, 0));
        for (auto& row : m) {
            for (int r = 0; r < raters; ++r) ++row[rng.below(cats)];
        }
        m[0].assign(cats, 0);
        m[0][0] = raters;
        m[1].assign(cats, 0);
        m[1][1] = raters;
        require(std::abs(fleiss_kappa(m) - oracle_kappa(m)) < 1e-9, "fleiss_kappa");
    }
    require(fleiss_kappa({{4, 0, 0}, {0, 4, 0}, {0, 0, 4}, {4, 0, 0}}) == 1.0, "perfect agreement kappa != 1");
    return "novelty, pearson, spearman, kappa within 1e-9";
}

// --- 6 --------------------------------------------------------------------------

std::string ablations() {
    {
        const auto out = run_case(golden_story(), ablation_config(AblationVariant::NoExploration), golden_services());
        int exploration_events = 0;
        for (const auto& e : out.trace.events) {
            exploration_events += e.payload.is_object() && e.payload.value("phase", "") == "Exploration";
            if (e.kind == EventKind::ProviderCall) {
                exploration_events +=
                    e.payload.at("request").at("stage_tag").get<std::string>().starts_with("exploration.");
            }
        }
        require(exploration_events == 0, "NoExploration: " + std::to_string(exploration_events) + " Exploration events");
        for (const auto& u : out.result.uus) require(!u.strategy, "NoExploration: UU with exploration provenance");
    }
    {
        const auto out = run_case(golden_story(), ablation_config(AblationVariant::NoSearch), golden_services());
        require(count_events(out.trace, EventKind::SearchCall) == 0, "NoSearch: SearchCall events present");
        const auto candidates = all_candidates(out.trace);
        require(!candidates.empty(), "NoSearch: no candidates were validated");
        for (const auto& u : candidates) {
            for (auto c : {Component::F, Component::I, Component::C}) {
                require(u.validation && u.validation->component(c) <= 0.3, "NoSearch: component above 0.3");
            }
        }
    }
    {
        const auto out = run_case(golden_story(), ablation_config(AblationVariant::DiscoveryOnly), golden_services());
        require(out.result.deliverable == "StrategicBrief" && out.result.brief && out.result.uus.empty() &&
                    !out.result.solution && out.result.baseline_output.empty(),
                "DiscoveryOnly: deliverable " + out.result.deliverable);
    }
    return "NoExploration, NoSearch, DiscoveryOnly";
}

// --- 7 --------------------------------------------------------------------------

EnablerStory random_story(text::SplitMix64& rng, int id) {
    auto s = golden_story();
    s.id = "story-" + std::to_string(id);
    auto sentences = [&](std::size_t n) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back("Clause " + std::to_string(rng.below(100000)) + " holds.");
        return text::join(out, " ");
    };
    s.narrative = sentences(1 + rng.below(15));
    s.expected_result = sentences(1 + rng.below(3));
    s.actual_result = sentences(1 + rng.below(3));
    s.potential_fix = sentences(1 + rng.below(3));
    return s;
}

std::string degradation() {
    text::SplitMix64 rng(7);
    for (int t = 0; t < 100; ++t) {
        const auto story = random_story(rng, t);
        const auto seed = rng.next();
        const double lo_ratio = 0.25 + rng.uniform() * 0.35;
        const double hi_ratio = lo_ratio + rng.uniform() * (0.60 - lo_ratio);
        const auto lo = DegradationSpec::make(lo_ratio, DegradationMode::Remove, seed);
        const auto hi = DegradationSpec::make(hi_ratio, DegradationMode::Remove, seed);
        const auto n = sentence_units(story).size();
        const auto k = static_cast<std::size_t>(std::ceil(lo_ratio * static_cast<double>(n) - 1e-9));
        const auto degraded = degrade_input(story, lo);
        require(sentence_units(degraded).size() == n - k, "removed count differs from ceil(ratio*N)");
        require(degraded == degrade_input(story, lo), "same seed gave different output");
        const auto a = degraded_units(story, lo), b = degraded_units(story, hi);
        require(a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin()), "removal sets not nested");
        require(degrade_input(story, DegradationSpec::make(0, DegradationMode::Remove, seed)) == story,
                "ratio 0 changed the story");
    }
    return "100 pairs: ceil count, deterministic, nested, identity at 0";
}

// --- 8 --------------------------------------------------------------------------

std::string dataset_consensus() {
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto f = random_dataset(1000 + trial);
        DatasetOptions opts;
        opts.k = f.k;
        const auto built = build_dataset(f.tasks, scorers(f), opts);
        std::vector<std::string> got;
        for (const auto& s : built.stories) got.push_back(s.id);
        require(got == brute_force_selection(f), "trial " + std::to_string(trial) + " differs from brute force");
    }
    const auto f = random_dataset(4242);
    DatasetOptions opts;
    opts.k = f.k;
    const auto dir = std::filesystem::temp_directory_path() / "u2f_acceptance_dataset";
    std::filesystem::create_directories(dir);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    };
    write_dataset((dir / "a.jsonl").string(), build_dataset(f.tasks, scorers(f), opts));
    write_dataset((dir / "b.jsonl").string(), build_dataset(f.tasks, scorers(f), opts));
    require(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl") &&
                slurp(dir / "a.jsonl.provenance.json") == slurp(dir / "b.jsonl.provenance.json"),
            "re-run not byte-identical");
    return "100/100 match brute force; re-run byte-identical";
}

// --- 9 --------------------------------------------------------------------------

std::string baseline_modes() {
    const std::pair<Mode, std::string_view> modes[] = {
        {Mode::ZeroShot, kZeroShotMarker}, {Mode::RoleBased, kRoleBasedMarker}, {Mode::SEAP, kSeapMarker}};
    for (const auto& [mode, marker] : modes) {
        RunConfig c;
        c.mode = mode;
        auto chat = golden_script();
        const auto out = run_case(golden_story(), c, services_with(chat));
        require(out.result.status == Phase::Done, to_string(mode) + " ended " + to_string(out.result.status));
        require(chat->call_count() == 1, to_string(mode) + ": " + std::to_string(chat->call_count()) + " provider calls");
        require(count_events(out.trace, EventKind::ProviderCall) == 1, to_string(mode) + ": trace call count");
        for (const auto& e : out.trace.events) {
            if (e.kind != EventKind::ProviderCall) continue;
            const auto& req = e.payload.at("request");
            const auto prompt = req.at("system_prompt").get<std::string>() + req.at("user_prompt").get<std::string>();
            require(prompt.find(marker) != std::string::npos, to_string(mode) + ": marker missing");
        }
    }
    return "ZeroShot, RoleBased, SEAP: one call each, markers present";
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<std::string()>>> checks{
        {"state-machine totality", state_machine_totality},
        {"golden trace", golden_trace},
        {"feedback edges", feedback_edges},
        {"uu filter", uu_filter},
        {"metric oracles", metric_oracles},
        {"ablation", ablations},
        {"degradation", degradation},
        {"dataset consensus", dataset_consensus},
        {"baseline modes", baseline_modes},
    };
    int failures = 0;
    for (const auto& [name, check] : checks) {
        try {
            std::cout << "PASS " << name << " (" << check() << ")\n";
        } catch (const Violation& v) {
            ++failures;
            std::cout << "FAIL " << name << ": " << v.what << "\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL " << name << ": exception: " << e.what() << "\n";
        }
        std::cout.flush();
    }
    return failures == 0 ? 0 : 1;
}
