#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dataset_support.hpp"
#include "support.hpp"

using namespace u2f;
using namespace u2f::testing;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> ids(const std::vector<EnablerStory>& stories) {
    std::vector<std::string> out;
    for (const auto& s : stories) out.push_back(s.id);
    return out;
}

} // namespace

TEST(Extract, LabeledSections) {
    const auto f = parse_labeled_fields("Intro\n**Expected Result:** it works\n## Actual result: it crashes\n"
                                        "Potential fix: guard the pointer\n");
    EXPECT_EQ(f.expected_result, "it works");
    EXPECT_EQ(f.actual_result, "it crashes");
    EXPECT_EQ(f.potential_fix, "guard the pointer");
}

TEST(Extract, FallbackFillsGaps) {
    auto mock = std::make_shared<ScriptedMockProvider>();
    mock->on_stage("dataset.extract",
                   "=== expected_result ===\nok\n=== actual_result ===\nbad\n=== potential_fix ===\nretry");
    Gateway g(mock);
    RawTask t{"T1", "Title", "Expected Result: fine", {}};
    const auto f = extract_fields(t, &g);
    EXPECT_EQ(f.expected_result, "fine");
    EXPECT_EQ(f.potential_fix, "retry");
}

TEST(Extract, NoneMeansMissing) {
    auto mock = std::make_shared<ScriptedMockProvider>();
    mock->on_stage("dataset.extract",
                   "=== expected_result ===\nok\n=== actual_result ===\nbad\n=== potential_fix ===\nnone");
    Gateway g(mock);
    try {
        extract_fields(RawTask{"T9", "", "just prose", {}}, &g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ExtractionFailed);
        EXPECT_NE(std::string(e.what()).find("T9: potential_fix"), std::string::npos);
    }
}

TEST(Transcribe, NarrativeLengthEnforced) {
    auto mock = std::make_shared<ScriptedMockProvider>();
    mock->on_stage("dataset.transcribe", "=== narrative ===\ntoo short\n=== story_type ===\nArchitecture\n"
                                         "=== business_value ===\n3\n=== feasibility ===\n3\n=== impact ===\n3");
    Gateway g(mock);
    RawTask t{"T1", "Title", "Expected Result: a\nActual Result: b\nPotential Fix: c", {}};
    try {
        transcribe_story(t, parse_labeled_fields(t.body), "m", g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NarrativeLengthViolation);
    }
    EXPECT_EQ(mock->call_count(), 2u);  // one repair
}

TEST(Transcribe, ArtifactsAndRankKey) {
    auto mock = std::make_shared<ScriptedMockProvider>();
    mock->on_stage("dataset.transcribe", transcription({5, 2, 4}));
    Gateway g(mock);
    RawTask t{"T1", "Title", "Expected Result: a\nActual Result: b\nPotential Fix: c", {}};
    const auto s = transcribe_story(t, parse_labeled_fields(t.body), "m", g);
    EXPECT_EQ(s.rank_key, 11);
    EXPECT_EQ(s.story.potential_fix, "c");
    EXPECT_EQ(s.story.artifact_corpus, (std::vector<std::string>{"Title", t.body}));
}

TEST(Intersect, MismatchedSets) {
    EXPECT_THROW(rank_and_intersect({{}}, 3), Error);
    ScoredStory a;
    a.story = golden_story();
    ScoredStory b = a;
    b.story.id = "other";
    try {
        rank_and_intersect({{a}, {b}}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MismatchedTaskSets);
    }
}

TEST(Build, ConsensusMatchesBruteForce) {
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto f = random_dataset(trial);
        DatasetOptions opts;
        opts.k = f.k;
        opts.pool_size = 2;
        const auto built = build_dataset(f.tasks, scorers(f), opts);
        ASSERT_EQ(ids(built.stories), brute_force_selection(f)) << "trial " << trial;
    }
}

TEST(Build, RerunIsByteIdentical) {
    const auto f = random_dataset(77);
    DatasetOptions opts;
    opts.k = f.k;
    const auto dir = fs::temp_directory_path() / "u2f_dataset_rerun";
    fs::create_directories(dir);
    write_dataset((dir / "a.jsonl").string(), build_dataset(f.tasks, scorers(f), opts));
    opts.pool_size = 1;
    write_dataset((dir / "b.jsonl").string(), build_dataset(f.tasks, scorers(f), opts));
    EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
    EXPECT_EQ(slurp(dir / "a.jsonl.provenance.json"), slurp(dir / "b.jsonl.provenance.json"));
}

TEST(Build, FailedTranscriptionExcludesTaskEverywhere) {
    auto f = random_dataset(5);
    f.k = 30;
    auto models = scorers(f);
    const auto victim = f.tasks.front().id;
    auto good = models[1].provider;
    models[1].provider = std::make_shared<LambdaProvider>(
        [good, victim](const ChatRequest& r) {
            if (r.user_prompt().find("Task " + victim + ":") != std::string::npos) {
                return ChatResponse{"no sections at all", "bad", 0, {}};
            }
            return good->complete(r);
        },
        false);
    DatasetOptions opts;
    opts.k = f.k;
    const auto built = build_dataset(f.tasks, models, opts);
    for (const auto& s : built.stories) EXPECT_NE(s.id, victim);
    EXPECT_EQ(built.stories.size(), f.tasks.size() - 1);
    bool recorded = false;
    for (const auto& r : built.provenance.at("rejected")) recorded |= r.at("id") == victim;
    EXPECT_TRUE(recorded);
}
