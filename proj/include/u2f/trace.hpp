#pragma once

#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "u2f/config.hpp"

namespace u2f {

enum class EventKind { StageStart, StageEnd, ProviderCall, SearchCall, Directive, ControlSignal, Error };

std::string to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct TraceEvent {
    long long seq = 0;
    EventKind kind = EventKind::StageStart;
    Json payload;
    /// FNV-1a over kind + payload; lets replay pinpoint tampered lines.
    std::string digest;

    bool operator==(const TraceEvent&) const = default;
};

std::string event_digest(EventKind kind, const Json& payload);

void to_json(Json& j, const TraceEvent& e);
void from_json(const Json& j, TraceEvent& e);

struct RunTrace {
    std::string case_id;
    std::vector<TraceEvent> events;
    RunConfig config_snapshot;
    /// The CaseResult written when the run finished, if it did.
    std::optional<Json> result;
};

void to_json(Json& j, const RunTrace& t);
void from_json(const Json& j, RunTrace& t);

/// Reads the JSON-Lines trace format: a header line, one line per event and
/// an optional trailing result line.
RunTrace read_trace_file(const std::string& path);
void write_trace_file(const std::string& path, const RunTrace& trace);

/// (kind, payload) pairs collected off the main recorder, e.g. by concurrent
/// sub-tasks, and appended later in a deterministic order.
using EventBuffer = std::vector<std::pair<EventKind, Json>>;

/// Append-only, thread-safe event log for one case. Sequence numbers are
/// gapless from 1. With a file sink every event is flushed as it is appended.
class TraceRecorder {
public:
    using Listener = std::function<void(const TraceEvent&)>;

    TraceRecorder(std::string case_id, RunConfig config, std::optional<std::string> sink_path = std::nullopt);

    const TraceEvent& append(EventKind kind, Json payload);
    void append_all(const EventBuffer& buffer);
    void set_result(const Json& case_result);

    /// Listener is called under the recorder lock, in seq order.
    int subscribe(Listener listener);
    void unsubscribe(int token);

    [[nodiscard]] RunTrace snapshot() const;
    [[nodiscard]] std::vector<TraceEvent> events_since(long long after_seq) const;
    [[nodiscard]] long long last_seq() const;
    [[nodiscard]] const std::string& case_id() const { return case_id_; }

private:
    std::string case_id_;
    RunConfig config_;
    std::vector<TraceEvent> events_;
    std::optional<Json> result_;
    std::unique_ptr<std::ofstream> sink_;
    std::vector<std::pair<int, Listener>> listeners_;
    int next_token_ = 1;
    mutable std::mutex mutex_;
};

} // namespace u2f
