#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "metric_oracles.hpp"
#include "support.hpp"
#include "u2f/eval.hpp"
#include "u2f/text.hpp"

using namespace u2f;
using namespace u2f::testing;

TEST(Metrics, NoveltyOfIdenticalTextIsZero) {
    HashEmbedder e;
    text::SplitMix64 rng(11);
    for (int i = 0; i < 100; ++i) {
        std::string s;
        for (int w = 0; w < 1 + static_cast<int>(rng.below(20)); ++w) s += "w" + std::to_string(rng.below(50)) + " ";
        EXPECT_EQ(semantic_novelty(s, s, e), 0.0);
    }
}

TEST(Metrics, NoveltyHandComputed) {
    TableEmbedder e(2);
    e.set("a", {1, 1}).set("b", {1, 0});
    EXPECT_NEAR(semantic_novelty("a", "b", e), 1 - 1 / std::sqrt(2.0), 1e-9);
    EXPECT_THROW(e.embed("unknown"), Error);
}

TEST(Metrics, NoveltyRejectsEmpty) {
    HashEmbedder e;
    EXPECT_THROW(semantic_novelty("", "x", e), Error);
}

TEST(Metrics, CorrelationsMatchOracles) {
    text::SplitMix64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 3 + rng.below(30);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(1 + rng.below(5));  // Likert, so ties occur
            y[i] = rng.uniform() * 10;
        }
        x[0] = 1;
        x[1] = 5;
        EXPECT_NEAR(pearson(x, y), oracle_pearson(x, y), 1e-9);
        EXPECT_NEAR(spearman(x, y), oracle_pearson(oracle_ranks(x), oracle_ranks(y)), 1e-9);
    }
}

TEST(Metrics, KappaMatchesOracle) {
    text::SplitMix64 rng(9);
    for (int t = 0; t < 50; ++t) {
        const std::size_t items = 2 + rng.below(20), cats = 2 + rng.below(4);
        const int raters = 2 + static_cast<int>(rng.below(6));
        std::vector<std::vector<int>> m(items, std::vector<int>(cats, 0));
        for (auto& row : m) {
            for (int r = 0; r < raters; ++r) ++row[rng.below(cats)];
        }
        m[0] = std::vector<int>(cats, 0);
        m[0][0] = raters;
        m[1] = std::vector<int>(cats, 0);
        m[1][1] = raters;
        EXPECT_NEAR(fleiss_kappa(m), oracle_kappa(m), 1e-9);
    }
}

TEST(Metrics, KappaPerfectAgreementIsOne) {
    EXPECT_DOUBLE_EQ(fleiss_kappa({{3, 0}, {0, 3}, {3, 0}}), 1.0);
}

TEST(Metrics, KappaErrors) {
    try {
        fleiss_kappa({{3, 0}, {0, 2}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnequalRaterCounts);
    }
    try {
        fleiss_kappa({{3, 0}, {3, 0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
    }
}

TEST(Metrics, CorrelationDegenerate) {
    EXPECT_THROW(pearson({1, 1, 1}, {1, 2, 3}), Error);
    EXPECT_THROW(pearson({1}, {1}), Error);
    EXPECT_THROW(spearman({1, 2}, {1, 2, 3}), Error);
}

TEST(Metrics, AverageRanksShareTies) {
    EXPECT_EQ(average_ranks({10, 20, 10, 30}), (std::vector<double>{1.5, 3, 1.5, 4}));
}

TEST(Metrics, MeanStdPopulation) {
    const auto m = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
    EXPECT_DOUBLE_EQ(m.mean, 5.0);
    EXPECT_DOUBLE_EQ(m.std, 2.0);
}

TEST(Ratings, ScoreOutOfRange) {
    Json j{{"case_id", "c"}, {"rater_id", "r"}, {"rater_kind", "HumanExpert"}, {"novelty", 6}, {"feasibility", 3}};
    try {
        (void)j.get<RatingRecord>();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ScoreOutOfRange);
    }
}

TEST(Ratings, CsvReader) {
    const auto path = std::filesystem::temp_directory_path() / "u2f_ratings.csv";
    {
        std::ofstream f(path);
        f << "case_id,rater_id,rater_kind,novelty,feasibility,uu_approvals\n"
          << "s1,e1,expert,4,3,UU-1:1;UU-2:0\n"
          << "s1,j1,LLMJudge,5,4,\"UU-1:1\"\n";
    }
    const auto r = read_ratings(path.string());
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].rater_kind, RaterKind::HumanExpert);
    EXPECT_EQ(r[0].uu_approvals.size(), 2u);
    EXPECT_FALSE(r[0].uu_approvals[1].approved);
    EXPECT_EQ(r[1].rater_kind, RaterKind::LLMJudge);
    EXPECT_EQ(approval_rate(r, {RaterKind::HumanExpert}), 0.5);
    EXPECT_EQ(approval_rate(r, {RaterKind::HumanStudent}), std::nullopt);
}

TEST(Report, MissingRatingsNamed) {
    const auto outcome = run_case(golden_story(), RunConfig{}, golden_services());
    HashEmbedder e;
    try {
        evaluate_run({outcome.result}, {}, e);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::MissingRatings);
        EXPECT_NE(std::string(err.what()).find("silent-photography"), std::string::npos);
    }
}

TEST(Report, AggregatesPerLabel) {
    const auto u2f_run = run_case(golden_story(), RunConfig{}, golden_services()).result;
    RunConfig zs;
    zs.mode = Mode::ZeroShot;
    const auto zs_run = run_case(golden_story(), zs, golden_services()).result;

    RatingRecord a{"silent-photography", "U2F", "e1", RaterKind::HumanExpert, 4, 3, {{"UU-1", true, ""}}, {}, {}};
    RatingRecord b{"silent-photography", "U2F", "s1", RaterKind::HumanStudent, 2, 5, {{"UU-1", false, ""}}, {}, {}};
    RatingRecord c{"silent-photography", "ZeroShot", "e1", RaterKind::HumanExpert, 1, 4, {}, {}, {}};
    HashEmbedder e;
    const auto t = evaluate_run({u2f_run, zs_run}, {a, b, c}, e);
    ASSERT_EQ(t.rows.size(), 2u);
    const auto& row = t.rows[0].label == "U2F" ? t.rows[0] : t.rows[1];
    EXPECT_EQ(row.human_novelty.mean, 3.0);
    EXPECT_EQ(row.human_novelty.std, 1.0);
    EXPECT_EQ(row.expert_approval, 1.0);
    EXPECT_EQ(row.human_approval, 0.5);
    EXPECT_EQ(row.llm_approval, std::nullopt);
    EXPECT_GT(row.uus_per_case, 0.0);
    EXPECT_NE(to_markdown(t).find("U2F"), std::string::npos);
    EXPECT_NE(to_csv(t).find("ZeroShot"), std::string::npos);
}
