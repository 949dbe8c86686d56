#include "u2f/stage.hpp"

namespace u2f {

StageContext::StageContext(const Gateway& gateway, SearchAugmentor* search, const RunConfig& config,
                           const PromptLibrary& prompts, TraceRecorder* trace)
    : gateway_(&gateway), search_(search), config_(&config), prompts_(&prompts), trace_(trace) {}

ChatRequest StageContext::request(const std::string& stage_tag, const std::string& template_name,
                                  const std::map<std::string, std::string>& vars, int max_tokens) const {
    const auto p = prompts_->render(template_name, vars, render_constraints(directives_, phase_));
    return ChatRequest(stage_tag, p.system, p.user, default_temperature(stage_tag), max_tokens);
}

void StageContext::record(EventKind kind, Json payload) const {
    if (buffer_) {
        buffer_->emplace_back(kind, std::move(payload));
    } else if (trace_) {
        trace_->append(kind, std::move(payload));
    }
}

void StageContext::record_all(const EventBuffer& buffer) const {
    for (const auto& [kind, payload] : buffer) record(kind, payload);
}

CallObserver StageContext::call_observer() const {
    return [this](const ChatRequest& req, const ChatResponse* resp, const Error* err) {
        Json p{{"stage_tag", req.stage_tag()}, {"request", req}};
        if (resp) p["response"] = *resp;
        if (err) {
            Json e{{"code", std::string(to_string(err->code()))}, {"detail", err->detail()}};
            if (auto* rl = dynamic_cast<const RateLimitedError*>(err)) e["retry_after_ms"] = rl->retry_after().count();
            p["error"] = e;
        }
        record(EventKind::ProviderCall, std::move(p));
    };
}

SearchObserver StageContext::search_observer() const {
    return [this](const SearchQuery& q, const std::vector<EvidenceItem>* results, const Error* err, bool cached) {
        Json p{{"query", q}, {"normalized", q.normalized()}, {"cached", cached}};
        if (results) p["results"] = *results;
        if (err) p["error"] = Json{{"code", std::string(to_string(err->code()))}, {"detail", err->detail()}};
        record(EventKind::SearchCall, std::move(p));
    };
}

std::vector<EvidenceItem> StageContext::try_search(const std::string& query, SearchPurpose purpose,
                                                   const std::string& issuer) const {
    if (!search_) return {};
    try {
        return search_->search(SearchQuery(query, purpose, issuer), search_observer());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ProviderUnavailable || e.code() == ErrorCode::QuotaExceeded) return {};
        throw;
    }
}

StageContext StageContext::buffered(EventBuffer& buffer) const {
    StageContext copy = *this;
    copy.buffer_ = &buffer;
    copy.hook_ = nullptr;
    return copy;
}

void StageContext::begin(const std::string& name, bool rerun) const {
    Json p{{"phase", to_string(phase_)}, {"stage", name}};
    if (rerun) p["rerun"] = true;
    record(EventKind::StageStart, std::move(p));
}

void StageContext::end(const std::string& name, const Json& output) const {
    record(EventKind::StageEnd, Json{{"phase", to_string(phase_)}, {"stage", name}, {"output", output}});
}

Error StageContext::failed(const std::string& name, const Error& e) const {
    // Keep the innermost attribution when errors cross nested sub-stages.
    if (!e.stage().empty()) return e;
    record(EventKind::Error, Json{{"phase", to_string(phase_)},
                                  {"stage", name},
                                  {"code", std::string(to_string(e.code()))},
                                  {"detail", e.detail()}});
    return e.with_stage(name);
}

bool StageContext::rerun_requested(const std::string& name, const Json& output) {
    BoundaryInfo info{++boundaries_, phase_, name, output};
    const auto added = hook_(info);
    for (const auto& d : added) {
        if (d.kind == DirectiveKind::FreeTextFeedback && d.applies_to(phase_)) return true;
    }
    return false;
}

std::string bullet_list(const std::vector<std::string>& items) {
    if (items.empty()) return "(none)";
    std::string out;
    for (const auto& i : items) out += "- " + i + "\n";
    out.pop_back();
    return out;
}

std::string render_evidence(const std::vector<EvidenceItem>& evidence) {
    if (evidence.empty()) return "";
    std::string out = "Evidence:\n";
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        out += "[" + std::to_string(i + 1) + "] " + evidence[i].snippet + " (" + evidence[i].source + ")\n";
    }
    out.pop_back();
    return out;
}

} // namespace u2f
