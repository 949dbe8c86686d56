#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "u2f/text.hpp"

using namespace u2f;
using namespace u2f::testing;

namespace {

Json filter_cases() {
    std::ifstream in(fixture("uu_filter/cases.json"));
    return Json::parse(in);
}

Json valid_story_json() { return Json(golden_story()); }

} // namespace

TEST(Filter, FixtureVerdictsMatchExactly) {
    const auto cases = filter_cases();
    const auto story = read_story_file(fixture(cases.at("story").get<std::string>())).at(0);
    int accepted = 0;
    for (const auto& c : cases.at("cases")) {
        SCOPED_TRACE(c.at("name").get<std::string>());
        const auto v = apply_uu_filter(c.at("candidate").get<UURecord>(), story);
        const auto& e = c.at("expected");
        EXPECT_EQ(v.evidence_absence, e.at("evidence_absence").get<bool>());
        EXPECT_EQ(v.discovery_triggering, e.at("discovery_triggering").get<bool>());
        EXPECT_EQ(v.solution_space_impact, e.at("solution_space_impact").get<bool>());
        EXPECT_EQ(v.non_triviality, e.at("non_triviality").get<bool>());
        EXPECT_EQ(v.accepted(), v.rejection_reasons.empty());
        accepted += v.accepted();
    }
    EXPECT_EQ(accepted, 5);
    EXPECT_EQ(cases.at("cases").size(), 8u);
}

TEST(Filter, VerbatimArtifactAlwaysRejected) {
    auto story = golden_story();
    text::SplitMix64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto& artifact = story.artifact_corpus[rng.below(story.artifact_corpus.size())];
        const auto sentences = text::split_sentences(artifact);
        UURecord c;
        c.name = "copy";
        c.overview = sentences[rng.below(sentences.size())].body;
        c.overlooked_reason = "reason";
        c.strategy = Strategy::Analogy;
        c.impacts = {ImpactCategory::Architecture};
        c.validation = ValidationScore::from_components(1, 1, 1);
        const auto v = apply_uu_filter(c, story);
        EXPECT_FALSE(v.evidence_absence) << c.overview;
        EXPECT_FALSE(v.accepted());
    }
}

TEST(Filter, MissingValidationThrows) {
    UURecord c;
    c.name = "x";
    try {
        apply_uu_filter(c, golden_story());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingValidation);
    }
}

TEST(Filter, ThresholdIsInclusive) {
    UURecord c;
    c.name = "edge";
    c.overview = "Something nobody wrote down";
    c.overlooked_reason = "because";
    c.strategy = Strategy::ReverseThinking;
    c.impacts = {ImpactCategory::CapabilityPriority};
    c.validation = ValidationScore::from_components(0.6, 0.6, 0.6);
    EXPECT_TRUE(apply_uu_filter(c, golden_story()).non_triviality);
    c.validation = ValidationScore::from_components(0.6, 0.6, 0.59);
    EXPECT_FALSE(apply_uu_filter(c, golden_story()).non_triviality);
}

TEST(Validation, ScoreComponentsBounded) {
    EXPECT_THROW(ValidationScore::from_components(1.1, 0, 0), Error);
    EXPECT_THROW(ValidationScore::from_components(0, -0.1, 0), Error);
    EXPECT_DOUBLE_EQ(ValidationScore::from_components(0.5, 0.25, 0.125).total(), 0.875);
}

TEST(Story, RoundTrip) {
    const auto s = golden_story();
    EXPECT_EQ(Json(s).get<EnablerStory>(), s);
}

TEST(Story, ReportsEveryIssue) {
    auto j = valid_story_json();
    j["business_value"] = 7;
    j["impact"] = 0;
    j.erase("narrative");
    try {
        validate_enabler_story(j);
        FAIL();
    } catch (const StoryValidationError& e) {
        EXPECT_EQ(e.issues().size(), 3u);
    }
}

TEST(Story, UnknownTypeRejected) {
    auto j = valid_story_json();
    j["story_type"] = "Marketing";
    EXPECT_THROW(validate_enabler_story(j), StoryValidationError);
}

TEST(Solution, MissingParts) {
    IntegratedSolution s;
    EXPECT_FALSE(s.complete());
    s.overview = "o";
    s.parity = true;
    s.implementation_plan = {{"t"}, {"p"}, {"r"}};
    EXPECT_TRUE(s.complete());
    s.parity = false;
    EXPECT_EQ(s.missing_parts(), std::vector<std::string>{"comparative_analysis"});
}

TEST(Text, SentenceSplitIsLossless) {
    const std::string s = "One. Two!  Three?\nFour";
    std::string joined;
    for (const auto& u : text::split_sentences(s)) joined += u.body + u.trailing;
    EXPECT_EQ(joined, s);
    EXPECT_EQ(text::split_sentences(s).size(), 4u);
}

TEST(Text, CanonicalWordsAndJaccard) {
    EXPECT_EQ(text::canonical_words("Foo,  bar!"), "foo bar");
    EXPECT_DOUBLE_EQ(text::jaccard("a b", "b c"), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(text::jaccard("", ""), 0.0);
}
