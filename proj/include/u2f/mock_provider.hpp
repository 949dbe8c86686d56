#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "u2f/gateway.hpp"

namespace u2f {

/// Content key of a request: hex FNV-1a of the user prompt.
std::string prompt_hash(std::string_view user_prompt);

/// One line of a mock script file (JSON-Lines):
///
///     {"stage_tag": "discovery.refine", "prompt_hash": "<hex>" | "*", "response": "..."}
///     {"stage_tag": "discovery.refine", "contains": "REPAIR REQUEST:", "response": "..."}
///     {"stage_tag": "discovery.baseline", "prompt_hash": "*", "error": "Timeout"}
///
/// Lookup for a request is: exact hash, then the first `contains` rule whose
/// needle occurs in the user prompt, then the stage's "*" entry. Anything
/// else is MissingScript.
struct ScriptEntry {
    std::string stage_tag;
    std::string prompt_hash;  ///< hex hash, "*", or empty for contains rules
    std::string contains;
    std::string response;
    std::optional<ErrorCode> error;
    long long retry_after_ms = 0;
};

void to_json(Json& j, const ScriptEntry& e);
void from_json(const Json& j, ScriptEntry& e);

/// Deterministic backend: the answer depends only on (stage_tag, prompt
/// content), never on call order.
class ScriptedMockProvider final : public ChatProvider {
public:
    explicit ScriptedMockProvider(std::string id = "mock");

    ScriptedMockProvider& add(ScriptEntry entry);
    ScriptedMockProvider& on_stage(const std::string& stage_tag, std::string response);
    ScriptedMockProvider& on_prompt(const std::string& stage_tag, std::string_view user_prompt, std::string response);
    ScriptedMockProvider& on_contains(const std::string& stage_tag, std::string needle, std::string response);
    ScriptedMockProvider& fail_stage(const std::string& stage_tag, ErrorCode code);

    /// Loads every `*.jsonl` file in a directory (or one file) into the script.
    void load(const std::string& path);
    static std::shared_ptr<ScriptedMockProvider> from_path(const std::string& path, std::string id = "mock");

    ChatResponse complete(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return id_; }
    [[nodiscard]] bool may_block() const override { return false; }

    [[nodiscard]] std::size_t call_count() const;
    [[nodiscard]] std::vector<ScriptEntry> entries() const;

private:
    std::string id_;
    std::map<std::pair<std::string, std::string>, ScriptEntry> exact_;
    std::map<std::string, std::vector<ScriptEntry>> contains_;
    std::map<std::string, ScriptEntry> fallback_;
    mutable std::mutex mutex_;
    std::size_t calls_ = 0;
};

/// Wraps another provider and writes every answered request as an exact-hash
/// script entry, turning a run into a replayable fixture.
class RecordingProvider final : public ChatProvider {
public:
    explicit RecordingProvider(std::shared_ptr<ChatProvider> inner) : inner_(std::move(inner)) {}

    ChatResponse complete(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return inner_->id(); }
    [[nodiscard]] bool may_block() const override { return inner_->may_block(); }

    /// Entries keyed by (stage_tag, prompt hash) with the user prompt that
    /// produced them.
    struct Recorded {
        ScriptEntry entry;
        std::string user_prompt;
    };
    [[nodiscard]] std::vector<Recorded> recorded() const;
    void write(const std::string& path) const;

private:
    std::shared_ptr<ChatProvider> inner_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, Recorded> recorded_;
};

/// Adapts a callable; handy for tests that need call-order behaviour such as
/// hanging or rate limiting.
class LambdaProvider final : public ChatProvider {
public:
    using Fn = std::function<ChatResponse(const ChatRequest&)>;
    LambdaProvider(Fn fn, bool may_block = true, std::string id = "lambda")
        : fn_(std::move(fn)), may_block_(may_block), id_(std::move(id)) {}

    ChatResponse complete(const ChatRequest& request) override { return fn_(request); }
    [[nodiscard]] std::string id() const override { return id_; }
    [[nodiscard]] bool may_block() const override { return may_block_; }

private:
    Fn fn_;
    bool may_block_;
    std::string id_;
};

} // namespace u2f
