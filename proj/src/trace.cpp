#include "u2f/trace.hpp"

#include <sstream>

#include "u2f/text.hpp"

namespace u2f {

namespace {

constexpr std::array<std::pair<Mode, const char*>, 4> kModes{{
    {Mode::U2F, "U2F"}, {Mode::ZeroShot, "ZeroShot"}, {Mode::RoleBased, "RoleBased"}, {Mode::SEAP, "SEAP"}}};
constexpr std::array<std::pair<Phase, const char*>, 5> kPhases{{{Phase::Discovery, "Discovery"},
                                                                  {Phase::Exploration, "Exploration"},
                                                                  {Phase::Integration, "Integration"},
                                                                  {Phase::Done, "Done"},
                                                                  {Phase::Failed, "Failed"}}};
constexpr std::array<std::pair<EventKind, const char*>, 7> kKinds{{{EventKind::StageStart, "StageStart"},
                                                                    {EventKind::StageEnd, "StageEnd"},
                                                                    {EventKind::ProviderCall, "ProviderCall"},
                                                                    {EventKind::SearchCall, "SearchCall"},
                                                                    {EventKind::Directive, "Directive"},
                                                                    {EventKind::ControlSignal, "ControlSignal"},
                                                                    {EventKind::Error, "Error"}}};

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::pair<E, const char*>, N>& table) {
    const auto key = text::to_lower(s);
    for (const auto& [v, name] : table) {
        if (key == text::to_lower(name)) return v;
    }
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string name_of(E v, const std::array<std::pair<E, const char*>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == v) return name;
    }
    return "?";
}

} // namespace

std::string to_string(Mode m) { return name_of(m, kModes); }
std::string to_string(Phase p) { return name_of(p, kPhases); }
std::string to_string(EventKind k) { return name_of(k, kKinds); }
std::optional<Mode> parse_mode(std::string_view s) { return lookup(s, kModes); }
std::optional<Phase> parse_phase(std::string_view s) { return lookup(s, kPhases); }
std::optional<EventKind> parse_event_kind(std::string_view s) { return lookup(s, kKinds); }

// --- RunConfig -------------------------------------------------------------------

void to_json(Json& j, const RunConfig& c) {
    Json stages = Json::array();
    for (auto p : c.enabled_stages) stages.push_back(to_string(p));
    j = Json{{"mode", to_string(c.mode)},
             {"enabled_stages", stages},
             {"search_enabled", c.search_enabled},
             {"max_resets", c.max_resets},
             {"max_deepens", c.max_deepens},
             {"chat_provider", c.chat_provider},
             {"search_provider", c.search_provider},
             {"thresholds",
              {{"overlap_threshold", c.thresholds.overlap_threshold}, {"min_total_v", c.thresholds.min_total_v}}},
             {"max_candidates", c.max_candidates},
             {"analogy_domains", c.analogy_domains},
             {"max_repairs", c.max_repairs},
             {"parallel_analogies", c.parallel_analogies},
             {"search_max_results", c.search_max_results},
             {"variant", c.variant}};
}

void from_json(const Json& j, RunConfig& c) {
    RunConfig d;
    if (j.contains("mode")) {
        auto m = parse_mode(j.at("mode").get<std::string>());
        if (!m) fail(ErrorCode::InvalidValue, "mode=" + j.at("mode").dump());
        d.mode = *m;
    }
    if (j.contains("enabled_stages")) {
        d.enabled_stages.clear();
        for (const auto& s : j.at("enabled_stages")) {
            auto p = parse_phase(s.get<std::string>());
            if (!p || *p == Phase::Done || *p == Phase::Failed) fail(ErrorCode::InvalidValue, "stage=" + s.dump());
            d.enabled_stages.insert(*p);
        }
    }
    d.search_enabled = j.value("search_enabled", d.search_enabled);
    d.max_resets = j.value("max_resets", d.max_resets);
    d.max_deepens = j.value("max_deepens", d.max_deepens);
    d.chat_provider = j.value("chat_provider", d.chat_provider);
    d.search_provider = j.value("search_provider", d.search_provider);
    if (j.contains("thresholds")) {
        d.thresholds.overlap_threshold = j.at("thresholds").value("overlap_threshold", d.thresholds.overlap_threshold);
        d.thresholds.min_total_v = j.at("thresholds").value("min_total_v", d.thresholds.min_total_v);
    }
    d.max_candidates = j.value("max_candidates", d.max_candidates);
    d.analogy_domains = j.value("analogy_domains", d.analogy_domains);
    d.max_repairs = j.value("max_repairs", d.max_repairs);
    d.parallel_analogies = j.value("parallel_analogies", d.parallel_analogies);
    d.search_max_results = j.value("search_max_results", d.search_max_results);
    d.variant = j.value("variant", d.variant);
    if (d.max_resets < 0 || d.max_deepens < 0) fail(ErrorCode::InvalidValue, "loop caps must be >= 0");
    c = std::move(d);
}

// --- events ---------------------------------------------------------------------------

std::string event_digest(EventKind kind, const Json& payload) {
    return text::hex64(text::fnv1a64(to_string(kind) + "\n" + payload.dump()));
}

void to_json(Json& j, const TraceEvent& e) {
    j = Json{{"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload}, {"digest", e.digest}};
}

void from_json(const Json& j, TraceEvent& e) {
    e.seq = j.at("seq").get<long long>();
    auto k = parse_event_kind(j.at("kind").get<std::string>());
    if (!k) fail(ErrorCode::InvalidValue, "event kind " + j.at("kind").dump());
    e.kind = *k;
    e.payload = j.value("payload", Json::object());
    e.digest = j.value("digest", std::string{});
}

void to_json(Json& j, const RunTrace& t) {
    j = Json{{"case_id", t.case_id}, {"config", t.config_snapshot}, {"events", t.events}};
    if (t.result) j["result"] = *t.result;
}

void from_json(const Json& j, RunTrace& t) {
    t.case_id = j.at("case_id").get<std::string>();
    t.config_snapshot = j.value("config", Json::object()).get<RunConfig>();
    t.events = j.value("events", std::vector<TraceEvent>{});
    t.result.reset();
    if (j.contains("result")) t.result = j.at("result");
}

RunTrace read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open trace " + path);
    RunTrace t;
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(ErrorCode::InvalidValue, path + ":" + std::to_string(lineno) + ": malformed JSON");
        const auto type = j.value("type", std::string{});
        if (type == "header") {
            t.case_id = j.at("case_id").get<std::string>();
            t.config_snapshot = j.at("config").get<RunConfig>();
            header = true;
        } else if (type == "event") {
            t.events.push_back(j.get<TraceEvent>());
        } else if (type == "result") {
            t.result = j.at("case_result");
        } else {
            fail(ErrorCode::InvalidValue, path + ":" + std::to_string(lineno) + ": unknown line type");
        }
    }
    if (!header) fail(ErrorCode::InvalidValue, path + ": missing trace header");
    return t;
}

void write_trace_file(const std::string& path, const RunTrace& trace) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << Json{{"type", "header"}, {"case_id", trace.case_id}, {"config", trace.config_snapshot}}.dump() << '\n';
    for (const auto& e : trace.events) {
        Json j = e;
        j["type"] = "event";
        out << j.dump() << '\n';
    }
    if (trace.result) out << Json{{"type", "result"}, {"case_result", *trace.result}}.dump() << '\n';
}

// --- recorder ----------------------------------------------------------------------------

TraceRecorder::TraceRecorder(std::string case_id, RunConfig config, std::optional<std::string> sink_path)
    : case_id_(std::move(case_id)), config_(std::move(config)) {
    if (sink_path) {
        sink_ = std::make_unique<std::ofstream>(*sink_path, std::ios::trunc);
        if (!*sink_) fail(ErrorCode::IoError, "cannot write trace " + *sink_path);
        *sink_ << Json{{"type", "header"}, {"case_id", case_id_}, {"config", config_}}.dump() << '\n';
        sink_->flush();
    }
}

const TraceEvent& TraceRecorder::append(EventKind kind, Json payload) {
    std::lock_guard lock(mutex_);
    TraceEvent e;
    e.seq = static_cast<long long>(events_.size()) + 1;
    e.kind = kind;
    e.digest = event_digest(kind, payload);
    e.payload = std::move(payload);
    events_.push_back(std::move(e));
    const auto& stored = events_.back();
    if (sink_) {
        Json j = stored;
        j["type"] = "event";
        *sink_ << j.dump() << '\n';
        sink_->flush();
    }
    for (const auto& [_, listener] : listeners_) listener(stored);
    return stored;
}

void TraceRecorder::append_all(const EventBuffer& buffer) {
    for (const auto& [kind, payload] : buffer) append(kind, payload);
}

void TraceRecorder::set_result(const Json& case_result) {
    std::lock_guard lock(mutex_);
    result_ = case_result;
    if (sink_) {
        *sink_ << Json{{"type", "result"}, {"case_result", case_result}}.dump() << '\n';
        sink_->flush();
    }
}

int TraceRecorder::subscribe(Listener listener) {
    std::lock_guard lock(mutex_);
    const int token = next_token_++;
    listeners_.emplace_back(token, std::move(listener));
    return token;
}

void TraceRecorder::unsubscribe(int token) {
    std::lock_guard lock(mutex_);
    std::erase_if(listeners_, [token](const auto& p) { return p.first == token; });
}

RunTrace TraceRecorder::snapshot() const {
    std::lock_guard lock(mutex_);
    return RunTrace{case_id_, events_, config_, result_};
}

std::vector<TraceEvent> TraceRecorder::events_since(long long after_seq) const {
    std::lock_guard lock(mutex_);
    std::vector<TraceEvent> out;
    for (const auto& e : events_) {
        if (e.seq > after_seq) out.push_back(e);
    }
    return out;
}

long long TraceRecorder::last_seq() const {
    std::lock_guard lock(mutex_);
    return static_cast<long long>(events_.size());
}

} // namespace u2f
