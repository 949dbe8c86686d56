#pragma once

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "u2f/dataset.hpp"
#include "u2f/mock_provider.hpp"
#include "u2f/text.hpp"

namespace u2f::testing {

struct Scores {
    int business_value, feasibility, impact;
};

/// Random labeled tasks and per-model score tables.
struct DatasetFixture {
    std::vector<RawTask> tasks;
    std::vector<std::map<std::string, Scores>> scores;  // per model
    std::size_t k = 1;
};

inline DatasetFixture random_dataset(std::uint64_t seed) {
    text::SplitMix64 rng(seed);
    DatasetFixture f;
    const auto n = 1 + rng.below(30);
    f.k = 1 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) {
        RawTask t;
        t.id = "T" + std::to_string(100 + rng.below(900)) + "-" + std::to_string(i);
        t.title = "Task " + std::to_string(i);
        t.body = "Expected Result: works\nActual Result: broken " + std::to_string(i) + "\nPotential Fix: patch it";
        f.tasks.push_back(t);
    }
    f.scores.resize(3);
    for (auto& table : f.scores) {
        for (const auto& t : f.tasks) {
            table[t.id] = {1 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(5)),
                           1 + static_cast<int>(rng.below(5))};
        }
    }
    return f;
}

inline std::string transcription(const Scores& s) {
    std::string narrative;
    for (int i = 0; i < 200; ++i) narrative += "word ";
    return "=== narrative ===\n" + narrative + "\n=== story_type ===\nArchitecture\n=== business_value ===\n" +
           std::to_string(s.business_value) + "\n=== feasibility ===\n" + std::to_string(s.feasibility) +
           "\n=== impact ===\n" + std::to_string(s.impact);
}

/// A scorer answering from its table, keyed by the task id in the prompt.
inline std::shared_ptr<ChatProvider> table_scorer(std::map<std::string, Scores> table) {
    return std::make_shared<LambdaProvider>(
        [table = std::move(table)](const ChatRequest& r) {
            static const std::regex id_re(R"(Task (\S+):)");
            std::smatch m;
            const auto& prompt = r.user_prompt();
            if (!std::regex_search(prompt, m, id_re)) fail(ErrorCode::MissingScript, "no task id");
            return ChatResponse{transcription(table.at(m[1].str())), "table", 0, {}};
        },
        false, "table");
}

inline std::vector<ScorerModel> scorers(const DatasetFixture& f) {
    std::vector<ScorerModel> out;
    for (std::size_t m = 0; m < f.scores.size(); ++m) {
        out.push_back({"model-" + std::to_string(m), table_scorer(f.scores[m])});
    }
    return out;
}

/// Brute-force top-k intersection: a task is selected iff, for every model,
/// fewer than k tasks beat it (higher sum, or equal sum and smaller id).
inline std::vector<std::string> brute_force_selection(const DatasetFixture& f) {
    std::vector<std::string> out;
    for (const auto& t : f.tasks) {
        bool everywhere = true;
        for (const auto& table : f.scores) {
            auto key = [&](const std::string& id) {
                const auto& s = table.at(id);
                return s.business_value + s.feasibility + s.impact;
            };
            std::size_t better = 0;
            for (const auto& o : f.tasks) {
                if (key(o.id) > key(t.id) || (key(o.id) == key(t.id) && o.id < t.id)) ++better;
            }
            everywhere = everywhere && better < f.k;
        }
        if (everywhere) out.push_back(t.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace u2f::testing
