#include "u2f/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include "u2f/text.hpp"

namespace u2f {

namespace {

bool is_none(const std::string& s) {
    const auto l = text::to_lower(text::trim(s));
    return l.empty() || l == "none" || l == "n/a" || l == "(none)";
}

const PromptLibrary& library(const DatasetOptions& o) { return o.prompts ? *o.prompts : PromptLibrary::defaults(); }

} // namespace

void to_json(Json& j, const RawTask& t) {
    j = Json{{"id", t.id}, {"title", t.title}, {"body", t.body}, {"metadata", t.metadata}};
}

void from_json(const Json& j, RawTask& t) {
    if (!j.contains("id")) fail(ErrorCode::MissingField, "id");
    if (!j.contains("body")) fail(ErrorCode::MissingField, "body");
    t.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    t.title = j.value("title", std::string{});
    t.body = j.at("body").get<std::string>();
    if (text::trim(t.body).empty()) fail(ErrorCode::InvalidValue, "task " + t.id + " has an empty body");
    t.metadata.clear();
    if (j.contains("metadata")) {
        for (const auto& [k, v] : j.at("metadata").items()) t.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
}

std::vector<RawTask> read_raw_tasks(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::vector<RawTask> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(ErrorCode::InvalidValue, path + ":" + std::to_string(lineno) + ": malformed JSON");
        out.push_back(j.get<RawTask>());
    }
    return out;
}

ExtractedFields parse_labeled_fields(std::string_view body) {
    static const std::regex kHeader(R"(^[\s#>*_-]*(expected result|actual result|potential fix)[*_\s]*:[*_]*\s*(.*)$)",
                                    std::regex::icase);
    ExtractedFields out;
    std::string* current = nullptr;
    std::string line;
    std::string s(body);
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto nl = s.find('\n', pos);
        line = s.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? s.size() + 1 : nl + 1;
        std::smatch m;
        if (std::regex_match(line, m, kHeader)) {
            const auto label = text::to_lower(m[1].str());
            current = label == "expected result" ? &out.expected_result
                      : label == "actual result" ? &out.actual_result
                                                 : &out.potential_fix;
            *current = text::trim(m[2].str());
        } else if (current) {
            const auto t = text::trim(line);
            if (!t.empty()) *current += (current->empty() ? "" : " ") + t;
        }
    }
    out.labeled = !out.expected_result.empty() && !out.actual_result.empty() && !out.potential_fix.empty();
    return out;
}

ExtractedFields extract_fields(const RawTask& task, const Gateway* gateway, const PromptLibrary& prompts,
                               int max_repairs) {
    auto out = parse_labeled_fields(task.body);
    if (!out.labeled && gateway) {
        const FieldSchema schema{{FieldSpec::text("expected_result"), FieldSpec::text("actual_result"),
                                  FieldSpec::text("potential_fix")}};
        const auto p = prompts.render("dataset.extract", {{"task_id", task.id}, {"title", task.title}, {"body", task.body}});
        const auto r = gateway->complete_structured(ChatRequest("dataset.extract", p.system, p.user, 0.2, 1024), schema,
                                                    max_repairs);
        auto fill = [&](std::string& field, const char* name) {
            if (!field.empty()) return;
            const auto v = r.record.at(name).get<std::string>();
            if (!is_none(v)) field = text::trim(v);
        };
        fill(out.expected_result, "expected_result");
        fill(out.actual_result, "actual_result");
        fill(out.potential_fix, "potential_fix");
    }
    for (const auto& [value, name] : {std::pair{&out.expected_result, "expected_result"},
                                      std::pair{&out.actual_result, "actual_result"},
                                      std::pair{&out.potential_fix, "potential_fix"}}) {
        if (value->empty()) fail(ErrorCode::ExtractionFailed, task.id + ": " + name);
    }
    return out;
}

void to_json(Json& j, const ScoredStory& s) {
    j = Json{{"story", s.story}, {"scorer_model", s.scorer_model}, {"rank_key", s.rank_key}};
}

ScoredStory transcribe_story(const RawTask& task, const ExtractedFields& fields, const std::string& model,
                             const Gateway& gateway, const PromptLibrary& prompts, int max_repairs) {
    const FieldSchema schema{{
        FieldSpec::text("narrative"),
        FieldSpec::enumeration("story_type", {"Exploration", "Architecture", "Infrastructure", "Compliance"}),
        FieldSpec::integer("business_value", 1, 5),
        FieldSpec::integer("feasibility", 1, 5),
        FieldSpec::integer("impact", 1, 5),
    }};
    const RecordCheck check = [](const Json& r) -> std::string {
        const auto n = text::word_count(r.at("narrative").get<std::string>());
        if (n >= kMinNarrativeWords && n <= kMaxNarrativeWords) return {};
        return "the narrative has " + std::to_string(n) + " words; write between 150 and 250";
    };
    const auto p = prompts.render("dataset.transcribe", {{"task_id", task.id},
                                                         {"title", task.title},
                                                         {"expected_result", fields.expected_result},
                                                         {"actual_result", fields.actual_result},
                                                         {"potential_fix", fields.potential_fix},
                                                         {"safe_context", prompts.text("safe_context")}});
    const auto r = gateway.complete_structured(ChatRequest("dataset.transcribe", p.system, p.user, 0.2, 2048), schema,
                                               max_repairs, {}, check, ErrorCode::NarrativeLengthViolation);
    Json raw{{"id", task.id},
             {"narrative", r.record.at("narrative")},
             {"expected_result", fields.expected_result},
             {"actual_result", fields.actual_result},
             {"potential_fix", fields.potential_fix},
             {"story_type", r.record.at("story_type")},
             {"business_value", r.record.at("business_value")},
             {"feasibility", r.record.at("feasibility")},
             {"impact", r.record.at("impact")},
             {"artifact_corpus", Json::array()}};
    if (!text::trim(task.title).empty()) raw["artifact_corpus"].push_back(task.title);
    raw["artifact_corpus"].push_back(task.body);
    ScoredStory out;
    out.story = validate_enabler_story(raw);
    out.scorer_model = model;
    out.rank_key = out.story.business_value + out.story.feasibility + out.story.impact;
    return out;
}

std::vector<ScoredStory> top_k(std::vector<ScoredStory> set, std::size_t k) {
    std::sort(set.begin(), set.end(), [](const auto& a, const auto& b) {
        if (a.rank_key != b.rank_key) return a.rank_key > b.rank_key;
        return a.story.id < b.story.id;
    });
    if (set.size() > k) set.resize(k);
    return set;
}

std::vector<EnablerStory> rank_and_intersect(const std::vector<std::vector<ScoredStory>>& sets, std::size_t k) {
    if (sets.size() < 2) fail(ErrorCode::MismatchedTaskSets, "need at least two model sets");
    auto ids = [](const std::vector<ScoredStory>& set) {
        std::set<std::string> out;
        for (const auto& s : set) out.insert(s.story.id);
        return out;
    };
    const auto reference = ids(sets.front());
    for (std::size_t m = 1; m < sets.size(); ++m) {
        if (ids(sets[m]) != reference || sets[m].size() != sets.front().size()) {
            fail(ErrorCode::MismatchedTaskSets, "model set " + std::to_string(m) + " covers different task ids");
        }
    }
    std::map<std::string, int> votes;
    for (const auto& set : sets) {
        for (const auto& s : top_k(set, k)) ++votes[s.story.id];
    }
    std::vector<EnablerStory> out;
    for (const auto& s : sets.front()) {
        if (votes[s.story.id] == static_cast<int>(sets.size())) out.push_back(s.story);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

DatasetBuild build_dataset(const std::vector<RawTask>& tasks, const std::vector<ScorerModel>& models,
                           const DatasetOptions& options) {
    if (models.size() < 2) fail(ErrorCode::MismatchedTaskSets, "need at least two scorer models");
    const auto& prompts = library(options);

    // Extraction, one task at a time (cheap and mostly gateway-free).
    std::unique_ptr<Gateway> extractor;
    if (options.extractor) extractor = std::make_unique<Gateway>(options.extractor);
    std::vector<std::optional<ExtractedFields>> fields(tasks.size());
    Json rejected = Json::array();
    std::map<std::string, std::string> reject_reason;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        try {
            fields[i] = extract_fields(tasks[i], extractor.get(), prompts, options.max_repairs);
        } catch (const Error& e) {
            rejected.push_back({{"id", tasks[i].id}, {"stage", "extract"}, {"reason", e.what()}});
        }
    }

    // Transcription fans out over (task, model); results land in fixed slots.
    std::vector<Gateway> gateways;
    for (const auto& m : models) gateways.emplace_back(m.provider);
    struct Slot {
        std::optional<ScoredStory> story;
        std::string error;
    };
    std::vector<Slot> slots(tasks.size() * models.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t s = next++; s < slots.size(); s = next++) {
            const auto t = s / models.size();
            const auto m = s % models.size();
            if (!fields[t]) continue;
            try {
                slots[s].story = transcribe_story(tasks[t], *fields[t], models[m].id, gateways[m], prompts,
                                                  options.max_repairs);
            } catch (const Error& e) {
                slots[s].error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(options.pool_size, static_cast<int>(slots.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    Json scores = Json::object();
    std::vector<std::vector<ScoredStory>> sets(models.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!fields[t]) continue;
        bool ok = true;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const auto& slot = slots[t * models.size() + m];
            if (slot.story) {
                const auto& st = slot.story->story;
                scores[tasks[t].id][models[m].id] = {{"story_type", to_string(st.story_type)},
                                                     {"business_value", st.business_value},
                                                     {"feasibility", st.feasibility},
                                                     {"impact", st.impact},
                                                     {"rank_key", slot.story->rank_key}};
            } else {
                ok = false;
                rejected.push_back({{"id", tasks[t].id},
                                    {"stage", "transcribe"},
                                    {"model", models[m].id},
                                    {"reason", slot.error}});
            }
        }
        if (!ok) continue;
        for (std::size_t m = 0; m < models.size(); ++m) sets[m].push_back(*slots[t * models.size() + m].story);
    }

    DatasetBuild out;
    out.stories = rank_and_intersect(sets, options.k);
    Json model_ids = Json::array();
    for (const auto& m : models) model_ids.push_back(m.id);
    Json selected = Json::array();
    for (const auto& s : out.stories) selected.push_back(s.id);
    out.provenance = Json{{"k", options.k},
                          {"models", model_ids},
                          {"tasks", tasks.size()},
                          {"scores", scores},
                          {"rejected", rejected},
                          {"selected", selected}};
    return out;
}

void write_dataset(const std::string& path, const DatasetBuild& build) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_story_file(path, build.stories);
    std::ofstream side(path + ".provenance.json");
    if (!side) fail(ErrorCode::IoError, "cannot write " + path + ".provenance.json");
    side << build.provenance.dump(2) << "\n";
}

} // namespace u2f
