#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "u2f/gateway.hpp"
#include "u2f/prompts.hpp"

namespace u2f {

struct RawTask {
    std::string id;
    std::string title;
    std::string body;
    std::map<std::string, std::string> metadata;
};

void to_json(Json& j, const RawTask& t);
/// Requires id and a non-empty body.
void from_json(const Json& j, RawTask& t);
std::vector<RawTask> read_raw_tasks(const std::string& path);

struct ExtractedFields {
    std::string expected_result;
    std::string actual_result;
    std::string potential_fix;
    /// True when the labeled-section parser sufficed.
    bool labeled = false;
};

/// "Expected Result:", "Actual Result:" and "Potential Fix:" sections, any
/// case, optionally decorated with markdown; empty strings for absent ones.
ExtractedFields parse_labeled_fields(std::string_view body);

/// Labeled sections first; if any field is missing and a gateway is given,
/// a structured completion fills the gaps. Throws ExtractionFailed naming
/// the task and the first missing field.
ExtractedFields extract_fields(const RawTask& task, const Gateway* gateway = nullptr,
                               const PromptLibrary& prompts = PromptLibrary::defaults(), int max_repairs = 1);

inline constexpr std::size_t kMinNarrativeWords = 150;
inline constexpr std::size_t kMaxNarrativeWords = 250;

struct ScoredStory {
    EnablerStory story;
    std::string scorer_model;
    /// business_value + feasibility + impact.
    int rank_key = 0;
};

void to_json(Json& j, const ScoredStory& s);

/// Narrative, story type and the three scores from one model. The raw task
/// becomes the story's artifact corpus.
ScoredStory transcribe_story(const RawTask& task, const ExtractedFields& fields, const std::string& model,
                             const Gateway& gateway, const PromptLibrary& prompts = PromptLibrary::defaults(),
                             int max_repairs = 1);

/// The k best by rank_key (descending; ties by ascending id).
std::vector<ScoredStory> top_k(std::vector<ScoredStory> set, std::size_t k);

/// Stories whose id is in every model's top-k, sorted by id, taken from the
/// first model's transcription. Throws MismatchedTaskSets unless there are
/// at least two sets over identical ids.
std::vector<EnablerStory> rank_and_intersect(const std::vector<std::vector<ScoredStory>>& sets, std::size_t k);

struct ScorerModel {
    std::string id;
    std::shared_ptr<ChatProvider> provider;
};

struct DatasetOptions {
    std::size_t k = 400;
    int max_repairs = 1;
    int pool_size = 4;
    /// Extraction fallback; null disables it.
    std::shared_ptr<ChatProvider> extractor;
    const PromptLibrary* prompts = nullptr;
};

struct DatasetBuild {
    std::vector<EnablerStory> stories;
    /// {k, models, scores{task: {model: {...}}}, rejected[{id, stage, reason}], selected[ids]}
    Json provenance;
};

/// Extracts, transcribes with every model and intersects the top-k sets.
/// Per-task failures are recorded in the provenance and the task is
/// excluded from every model's set; they never abort the build.
DatasetBuild build_dataset(const std::vector<RawTask>& tasks, const std::vector<ScorerModel>& models,
                           const DatasetOptions& options);

/// Writes the dataset (JSON-Lines) and `<path>.provenance.json`.
void write_dataset(const std::string& path, const DatasetBuild& build);

} // namespace u2f
