#include "u2f/mock_provider.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "u2f/text.hpp"

namespace u2f {

namespace fs = std::filesystem;

std::string prompt_hash(std::string_view user_prompt) { return text::hex64(text::fnv1a64(user_prompt)); }

namespace {

std::optional<ErrorCode> parse_error_code(const std::string& s) {
    for (auto code : {ErrorCode::Timeout, ErrorCode::RateLimited, ErrorCode::ProviderError,
                      ErrorCode::ProviderUnavailable, ErrorCode::QuotaExceeded}) {
        if (to_string(code) == s) return code;
    }
    return std::nullopt;
}

} // namespace

void to_json(Json& j, const ScriptEntry& e) {
    j = Json{{"stage_tag", e.stage_tag}};
    if (!e.contains.empty()) {
        j["contains"] = e.contains;
    } else {
        j["prompt_hash"] = e.prompt_hash;
    }
    if (e.error) {
        j["error"] = std::string(to_string(*e.error));
        if (e.retry_after_ms) j["retry_after_ms"] = e.retry_after_ms;
    } else {
        j["response"] = e.response;
    }
}

void from_json(const Json& j, ScriptEntry& e) {
    e.stage_tag = j.at("stage_tag").get<std::string>();
    e.prompt_hash = j.value("prompt_hash", std::string{});
    e.contains = j.value("contains", std::string{});
    if (e.prompt_hash.empty() == e.contains.empty()) {
        fail(ErrorCode::InvalidValue, "script entry for " + e.stage_tag + " needs exactly one of prompt_hash/contains");
    }
    e.response = j.value("response", std::string{});
    e.error.reset();
    if (j.contains("error")) {
        e.error = parse_error_code(j.at("error").get<std::string>());
        if (!e.error) fail(ErrorCode::InvalidValue, "unknown scripted error " + j.at("error").dump());
    }
    e.retry_after_ms = j.value("retry_after_ms", 0LL);
}

ScriptedMockProvider::ScriptedMockProvider(std::string id) : id_(std::move(id)) {}

ScriptedMockProvider& ScriptedMockProvider::add(ScriptEntry entry) {
    std::lock_guard lock(mutex_);
    if (!entry.contains.empty()) {
        contains_[entry.stage_tag].push_back(std::move(entry));
    } else if (entry.prompt_hash == "*") {
        fallback_[entry.stage_tag] = std::move(entry);
    } else {
        auto key = std::make_pair(entry.stage_tag, entry.prompt_hash);
        exact_[key] = std::move(entry);
    }
    return *this;
}

ScriptedMockProvider& ScriptedMockProvider::on_stage(const std::string& stage_tag, std::string response) {
    return add({stage_tag, "*", "", std::move(response), std::nullopt, 0});
}

ScriptedMockProvider& ScriptedMockProvider::on_prompt(const std::string& stage_tag, std::string_view user_prompt,
                                                      std::string response) {
    return add({stage_tag, prompt_hash(user_prompt), "", std::move(response), std::nullopt, 0});
}

ScriptedMockProvider& ScriptedMockProvider::on_contains(const std::string& stage_tag, std::string needle,
                                                        std::string response) {
    return add({stage_tag, "", std::move(needle), std::move(response), std::nullopt, 0});
}

ScriptedMockProvider& ScriptedMockProvider::fail_stage(const std::string& stage_tag, ErrorCode code) {
    return add({stage_tag, "*", "", "", code, 0});
}

void ScriptedMockProvider::load(const std::string& path) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            const auto name = entry.path().filename().string();
            if (entry.is_regular_file() && name.size() > 6 && name.ends_with(".jsonl") && name != "search.jsonl") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else {
        files.emplace_back(path);
    }
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) fail(ErrorCode::IoError, "cannot open mock script " + file.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            auto j = Json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                fail(ErrorCode::InvalidValue, file.string() + ":" + std::to_string(lineno) + ": malformed JSON");
            }
            add(j.get<ScriptEntry>());
        }
    }
}

std::shared_ptr<ScriptedMockProvider> ScriptedMockProvider::from_path(const std::string& path, std::string id) {
    auto p = std::make_shared<ScriptedMockProvider>(std::move(id));
    p->load(path);
    return p;
}

ChatResponse ScriptedMockProvider::complete(const ChatRequest& request) {
    const ScriptEntry* hit = nullptr;
    std::lock_guard lock(mutex_);
    ++calls_;
    const auto& stage = request.stage_tag();
    if (auto it = exact_.find({stage, prompt_hash(request.user_prompt())}); it != exact_.end()) {
        hit = &it->second;
    }
    if (!hit) {
        if (auto it = contains_.find(stage); it != contains_.end()) {
            for (const auto& rule : it->second) {
                if (request.user_prompt().find(rule.contains) != std::string::npos) {
                    hit = &rule;
                    break;
                }
            }
        }
    }
    if (!hit) {
        if (auto it = fallback_.find(stage); it != fallback_.end()) hit = &it->second;
    }
    if (!hit) {
        fail(ErrorCode::MissingScript, "no script for stage '" + stage + "' prompt " + prompt_hash(request.user_prompt()));
    }
    if (hit->error) {
        if (*hit->error == ErrorCode::RateLimited) {
            throw RateLimitedError(Millis(hit->retry_after_ms), "scripted rate limit for " + stage);
        }
        fail(*hit->error, "scripted failure for " + stage);
    }
    ChatResponse r;
    r.text = hit->response;
    r.provider_id = id_;
    r.token_usage.input = static_cast<int>(text::word_count(request.system_prompt()) +
                                           text::word_count(request.user_prompt()));
    r.token_usage.output = static_cast<int>(text::word_count(r.text));
    return r;
}

std::size_t ScriptedMockProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::vector<ScriptEntry> ScriptedMockProvider::entries() const {
    std::lock_guard lock(mutex_);
    std::vector<ScriptEntry> out;
    for (const auto& [_, e] : exact_) out.push_back(e);
    for (const auto& [_, rules] : contains_) out.insert(out.end(), rules.begin(), rules.end());
    for (const auto& [_, e] : fallback_) out.push_back(e);
    return out;
}

ChatResponse RecordingProvider::complete(const ChatRequest& request) {
    ChatResponse r = inner_->complete(request);
    std::lock_guard lock(mutex_);
    ScriptEntry e{request.stage_tag(), prompt_hash(request.user_prompt()), "", r.text, std::nullopt, 0};
    recorded_[{e.stage_tag, e.prompt_hash}] = {e, request.user_prompt()};
    return r;
}

std::vector<RecordingProvider::Recorded> RecordingProvider::recorded() const {
    std::lock_guard lock(mutex_);
    std::vector<Recorded> out;
    for (const auto& [_, r] : recorded_) out.push_back(r);
    return out;
}

void RecordingProvider::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    for (const auto& r : recorded()) out << Json(r.entry).dump() << '\n';
}

} // namespace u2f
