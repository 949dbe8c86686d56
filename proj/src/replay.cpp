#include "u2f/replay.hpp"

#include <deque>
#include <map>
#include <set>

#include "u2f/text.hpp"

namespace u2f {

namespace {

/// Stories inside a trace were valid when the run started, but degraded
/// inputs may legitimately have empty texts; read them without re-validating.
EnablerStory story_from_trace(const Json& j) {
    EnablerStory s;
    s.id = j.at("id").get<std::string>();
    s.narrative = j.value("narrative", std::string{});
    s.expected_result = j.value("expected_result", std::string{});
    s.actual_result = j.value("actual_result", std::string{});
    s.potential_fix = j.value("potential_fix", std::string{});
    auto t = parse_story_type(j.at("story_type").get<std::string>());
    if (!t) fail(ErrorCode::UnknownStoryType, j.at("story_type").dump());
    s.story_type = *t;
    s.business_value = j.at("business_value").get<int>();
    s.feasibility = j.at("feasibility").get<int>();
    s.impact = j.at("impact").get<int>();
    s.artifact_corpus = j.value("artifact_corpus", std::vector<std::string>{});
    return s;
}

ErrorCode code_from(const Json& err) {
    const auto name = err.at("code").get<std::string>();
    for (int c = 0; c <= static_cast<int>(ErrorCode::Usage); ++c) {
        if (to_string(static_cast<ErrorCode>(c)) == name) return static_cast<ErrorCode>(c);
    }
    return ErrorCode::ProviderError;
}

/// Shared record of the first divergence; the pipeline swallows stage
/// errors into a Failed result, so divergence is reported out of band.
struct DivergenceSlot {
    std::optional<TraceDivergenceError> first;
    std::mutex mutex;

    [[noreturn]] void raise(long long seq, const std::string& detail) {
        TraceDivergenceError e(seq, detail);
        {
            std::lock_guard lock(mutex);
            if (!first) first = e;
        }
        throw e;
    }
};

class ReplayChatProvider final : public ChatProvider {
public:
    ReplayChatProvider(std::vector<const TraceEvent*> calls, long long last_seq, DivergenceSlot& slot)
        : calls_(std::move(calls)), last_seq_(last_seq), slot_(slot) {}

    ChatResponse complete(const ChatRequest& request) override {
        std::lock_guard lock(mutex_);
        if (cursor_ >= calls_.size()) {
            slot_.raise(last_seq_ + 1, "unrecorded provider call from " + request.stage_tag());
        }
        const TraceEvent& e = *calls_[cursor_++];
        if (Json(request) != e.payload.at("request")) {
            slot_.raise(e.seq, "prompt for " + request.stage_tag() + " differs from the recorded " +
                                   e.payload.at("request").value("stage_tag", std::string("?")) + " request");
        }
        if (e.payload.contains("error")) {
            // Plain Error even for RateLimited: the recorded event is the final
            // outcome after the gateway's own retries.
            throw Error(code_from(e.payload.at("error")), e.payload.at("error").value("detail", std::string{}));
        }
        return e.payload.at("response").get<ChatResponse>();
    }
    [[nodiscard]] std::string id() const override { return "replay"; }
    [[nodiscard]] bool may_block() const override { return false; }

    [[nodiscard]] std::optional<long long> first_unconsumed() const {
        std::lock_guard lock(mutex_);
        if (cursor_ < calls_.size()) return calls_[cursor_]->seq;
        return std::nullopt;
    }

private:
    std::vector<const TraceEvent*> calls_;
    std::size_t cursor_ = 0;
    long long last_seq_;
    DivergenceSlot& slot_;
    mutable std::mutex mutex_;
};

class ReplaySearchProvider final : public SearchProvider {
public:
    ReplaySearchProvider(const std::vector<const TraceEvent*>& searches, long long last_seq, DivergenceSlot& slot)
        : last_seq_(last_seq), slot_(slot) {
        for (const auto* e : searches) by_query_[e->payload.at("normalized").get<std::string>()].push_back(e);
    }

    std::vector<SearchHit> search(const std::string& normalized_query, int) override {
        std::lock_guard lock(mutex_);
        requested_.insert(normalized_query);
        auto it = by_query_.find(normalized_query);
        if (it == by_query_.end() || it->second.empty()) {
            slot_.raise(last_seq_ + 1, "unrecorded search '" + normalized_query + "'");
        }
        const TraceEvent* e = it->second.front();
        it->second.pop_front();
        if (e->payload.contains("error")) {
            throw Error(code_from(e->payload.at("error")), e->payload.at("error").value("detail", std::string{}));
        }
        std::vector<SearchHit> hits;
        for (const auto& r : e->payload.at("results")) {
            const auto item = r.get<EvidenceItem>();
            hits.push_back({item.source, item.snippet, item.retrieved_at});
        }
        return hits;
    }
    [[nodiscard]] std::string id() const override { return "replay"; }

    /// A recorded search never issued during replay. Leftover duplicates of
    /// an issued query are tolerated: concurrent analogy tasks can both miss
    /// the cache live, while the sequential replay hits it.
    [[nodiscard]] std::optional<long long> first_unconsumed() const {
        std::lock_guard lock(mutex_);
        std::optional<long long> out;
        for (const auto& [q, events] : by_query_) {
            if (requested_.count(q)) continue;
            for (const auto* e : events) {
                if (!out || e->seq < *out) out = e->seq;
            }
        }
        return out;
    }

private:
    std::map<std::string, std::deque<const TraceEvent*>> by_query_;
    std::set<std::string> requested_;
    long long last_seq_;
    DivergenceSlot& slot_;
    mutable std::mutex mutex_;
};

class ReplayChannel final : public InteractionChannel {
public:
    ReplayChannel(std::map<long long, std::vector<const TraceEvent*>> at, DivergenceSlot& slot)
        : at_(std::move(at)), slot_(slot) {}

    std::vector<HumanDirective> at_boundary(const BoundaryInfo& info) override {
        std::vector<HumanDirective> out;
        auto it = at_.find(info.index);
        if (it == at_.end()) return out;
        for (const auto* e : it->second) {
            if (e->payload.value("stage", std::string{}) != info.stage) {
                slot_.raise(e->seq, "directive recorded at " + e->payload.value("stage", std::string{}) +
                                        " but boundary " + std::to_string(info.index) + " is " + info.stage);
            }
            out.push_back(e->payload.at("directive").get<HumanDirective>());
        }
        at_.erase(it);
        return out;
    }

    [[nodiscard]] std::optional<long long> first_unconsumed() const {
        if (at_.empty()) return std::nullopt;
        return at_.begin()->second.front()->seq;
    }

private:
    std::map<long long, std::vector<const TraceEvent*>> at_;
    DivergenceSlot& slot_;
};

} // namespace

void verify_trace_integrity(const RunTrace& trace) {
    long long expected = 1;
    for (const auto& e : trace.events) {
        if (e.seq != expected) throw TraceDivergenceError(e.seq, "expected seq " + std::to_string(expected));
        if (e.digest != event_digest(e.kind, e.payload)) {
            throw TraceDivergenceError(e.seq, "payload does not match its digest");
        }
        ++expected;
    }
}

CaseResult replay(const RunTrace& trace, const ReplayOptions& options) {
    verify_trace_integrity(trace);
    if (trace.events.empty() || !trace.events.front().payload.contains("story")) {
        throw TraceDivergenceError(1, "trace does not start with a run_case event carrying the story");
    }
    const EnablerStory story = story_from_trace(trace.events.front().payload.at("story"));

    std::vector<const TraceEvent*> calls;
    std::vector<const TraceEvent*> searches;
    std::map<long long, std::vector<const TraceEvent*>> directives;
    for (const auto& e : trace.events) {
        if (e.kind == EventKind::ProviderCall) calls.push_back(&e);
        if (e.kind == EventKind::SearchCall && !e.payload.value("cached", false)) searches.push_back(&e);
        if (e.kind == EventKind::Directive && e.payload.value("source", std::string{}) == "human") {
            directives[e.payload.at("boundary").get<long long>()].push_back(&e);
        }
    }
    const long long last_seq = trace.events.back().seq;

    DivergenceSlot slot;
    auto chat = std::make_shared<ReplayChatProvider>(calls, last_seq, slot);
    auto search = std::make_shared<ReplaySearchProvider>(searches, last_seq, slot);
    ReplayChannel channel(std::move(directives), slot);

    RunConfig config = options.config_override.value_or(trace.config_snapshot);
    // Sequential analogies consume recorded calls in the order they were merged.
    config.parallel_analogies = false;

    FakeClock clock;
    RunServices services;
    services.chat = chat;
    services.search = search;
    services.gateway.requests_per_second = 0.0;
    services.clock = &clock;
    RunOptions opts;
    opts.channel = &channel;

    const auto outcome = run_case(story, config, services, opts);
    if (slot.first) throw *slot.first;
    if (auto seq = chat->first_unconsumed()) throw TraceDivergenceError(*seq, "recorded provider call never replayed");
    if (auto seq = search->first_unconsumed()) throw TraceDivergenceError(*seq, "recorded search never replayed");
    if (auto seq = channel.first_unconsumed()) throw TraceDivergenceError(*seq, "recorded directive never delivered");
    return outcome.result;
}

} // namespace u2f
