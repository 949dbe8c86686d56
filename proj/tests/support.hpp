#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "u2f/mock_provider.hpp"
#include "u2f/orchestrator.hpp"

namespace u2f::testing {

inline std::string fixture(const std::string& rel) { return std::string(U2F_FIXTURES_DIR) + "/" + rel; }

inline EnablerStory golden_story() {
    return read_story_file(fixture("silent_photography/story.json")).at(0);
}

inline std::shared_ptr<ScriptedMockProvider> golden_script() {
    return ScriptedMockProvider::from_path(fixture("silent_photography/script.jsonl"));
}

inline std::shared_ptr<FixtureSearchProvider> golden_search() {
    return FixtureSearchProvider::from_file(fixture("silent_photography/search.jsonl"));
}

inline RunServices golden_services() {
    RunServices s;
    s.chat = golden_script();
    s.search = golden_search();
    return s;
}

/// Number of events of a kind in a trace.
inline int count_events(const RunTrace& t, EventKind k) {
    int n = 0;
    for (const auto& e : t.events) n += e.kind == k;
    return n;
}

/// Every candidate the filter saw, accepted or rejected, over all passes.
inline std::vector<UURecord> all_candidates(const RunTrace& t) {
    std::vector<UURecord> out;
    for (const auto& e : t.events) {
        if (e.kind != EventKind::StageEnd || e.payload.value("stage", "") != "filter_candidates") continue;
        for (const char* key : {"uus", "rejected"}) {
            for (const auto& u : e.payload.at("output").value(key, Json::array())) out.push_back(u.get<UURecord>());
        }
    }
    return out;
}

/// Golden script with per-stage overrides. Each override list is served in
/// call order and its last entry repeats; other stages fall through.
class OverrideProvider final : public ChatProvider {
public:
    explicit OverrideProvider(std::shared_ptr<ChatProvider> base = golden_script()) : base_(std::move(base)) {}

    OverrideProvider& on(const std::string& stage_tag, std::vector<std::string> responses) {
        responses_[stage_tag] = std::move(responses);
        return *this;
    }

    ChatResponse complete(const ChatRequest& r) override {
        std::unique_lock lock(mutex_);
        ++calls_[r.stage_tag()];
        auto it = responses_.find(r.stage_tag());
        if (it == responses_.end()) {
            lock.unlock();
            return base_->complete(r);
        }
        const auto n = std::min(calls_[r.stage_tag()], it->second.size()) - 1;
        return {it->second[n], "override", 0, {}};
    }
    [[nodiscard]] std::string id() const override { return "override"; }
    [[nodiscard]] bool may_block() const override { return false; }

    [[nodiscard]] std::size_t calls(const std::string& stage_tag) const {
        std::lock_guard lock(mutex_);
        auto it = calls_.find(stage_tag);
        return it == calls_.end() ? 0 : it->second;
    }

private:
    std::shared_ptr<ChatProvider> base_;
    std::map<std::string, std::vector<std::string>> responses_;
    std::map<std::string, std::size_t> calls_;
    mutable std::mutex mutex_;
};

/// Plan answers for each integration control value.
inline std::string plan_with_control(const std::string& control, const std::string& reason) {
    return "=== toolchain ===\n- Camera HAL\n=== phases ===\n- Build\n=== risks ===\n- Regression\n"
           "=== control ===\n" + control + "\n=== reason ===\n" + reason;
}

/// A Critical candidate that quotes the golden problem statement.
inline const std::string kCriticalCandidates =
    "=== candidates ===\n- name: Covert capture liability | overview: Silent capture in quiet environments "
    "exposes the vendor to covert photography claims | overlooked: Privacy law is outside the story | impacts: "
    "CapabilityPriority | severity: Critical | invalidates: emits no audible sound in quiet environments";

/// Two accepted candidates that name each other as conflicting.
inline const std::string kConflictingCandidates =
    "=== candidates ===\n- name: Regional shutter-sound mandates | overview: Several markets require an audible "
    "shutter on camera phones, so silent capture must be region-aware | overlooked: No artifact mentions legal "
    "constraints | impacts: Architecture | severity: Normal | conflicts: Actuator acoustic emission\n"
    "- name: Actuator acoustic emission | overview: Autofocus and stabilisation motors click audibly during capture "
    "even when the sound effect is muted | overlooked: The noise is equated with the sound effect | impacts: "
    "TechnologyChoice | severity: Normal";

inline RunServices services_with(std::shared_ptr<ChatProvider> chat) {
    RunServices s;
    s.chat = std::move(chat);
    s.search = golden_search();
    return s;
}

inline std::vector<std::string> phases(std::initializer_list<const char*> names) {
    return {names.begin(), names.end()};
}

} // namespace u2f::testing
