#pragma once

#include <functional>
#include <string>
#include <vector>

#include "u2f/config.hpp"
#include "u2f/directive.hpp"
#include "u2f/gateway.hpp"
#include "u2f/prompts.hpp"
#include "u2f/search.hpp"
#include "u2f/trace.hpp"

namespace u2f {

/// A sub-stage boundary: the only point where humans may intervene.
struct BoundaryInfo {
    long long index = 0;  ///< 1-based count of boundaries reached in this run
    Phase phase = Phase::Discovery;
    std::string stage;
    Json output;  ///< what the sub-stage just produced
};

/// Returns the directives that were accepted at the boundary (already
/// appended to the context's directive list by the owner).
using BoundaryHook = std::function<std::vector<HumanDirective>(const BoundaryInfo&)>;

/// Everything an agent stage needs: gateway, optional search, prompts,
/// directives and the event sink. Agents are stateless; this is the only
/// thing threaded through them.
class StageContext {
public:
    StageContext(const Gateway& gateway, SearchAugmentor* search, const RunConfig& config,
                 const PromptLibrary& prompts = PromptLibrary::defaults(), TraceRecorder* trace = nullptr);

    [[nodiscard]] const Gateway& gateway() const { return *gateway_; }
    /// Null when search is disabled for the run.
    [[nodiscard]] SearchAugmentor* search() const { return search_; }
    [[nodiscard]] const RunConfig& config() const { return *config_; }
    [[nodiscard]] const PromptLibrary& prompts() const { return *prompts_; }

    [[nodiscard]] Phase phase() const { return phase_; }
    void set_phase(Phase p) { phase_ = p; }

    [[nodiscard]] const std::vector<HumanDirective>& directives() const { return directives_; }
    void set_directives(std::vector<HumanDirective> d) { directives_ = std::move(d); }
    void add_directive(HumanDirective d) { directives_.push_back(std::move(d)); }

    void set_boundary_hook(BoundaryHook hook) { hook_ = std::move(hook); }

    /// Renders a template with the current phase's human constraints and the
    /// stage's default temperature.
    [[nodiscard]] ChatRequest request(const std::string& stage_tag, const std::string& template_name,
                                      const std::map<std::string, std::string>& vars, int max_tokens = 1024) const;

    void record(EventKind kind, Json payload) const;
    void record_all(const EventBuffer& buffer) const;
    [[nodiscard]] CallObserver call_observer() const;
    [[nodiscard]] SearchObserver search_observer() const;

    /// Searches if search is enabled; never throws for provider failures,
    /// which are recorded and yield no evidence.
    std::vector<EvidenceItem> try_search(const std::string& query, SearchPurpose purpose,
                                         const std::string& issuer) const;

    /// A copy whose events go to `buffer` and which has no boundary hook;
    /// used by concurrent sub-tasks.
    [[nodiscard]] StageContext buffered(EventBuffer& buffer) const;

    /// Runs one named sub-stage: StageStart/StageEnd events, error
    /// attribution, then the boundary hook. If a FreeTextFeedback directive
    /// for this phase arrives at the boundary the sub-stage runs once more
    /// with the feedback in its prompts, and that output wins.
    template <class F>
    auto substage(const std::string& name, F&& fn) -> decltype(fn()) {
        auto out = run_once(name, fn, false);
        if (!hook_) return out;
        if (rerun_requested(name, Json(out))) out = run_once(name, fn, true);
        return out;
    }

private:
    template <class F>
    auto run_once(const std::string& name, F& fn, bool rerun) -> decltype(fn()) {
        begin(name, rerun);
        try {
            auto out = fn();
            end(name, Json(out));
            return out;
        } catch (const Error& e) {
            throw failed(name, e);
        }
    }
    void begin(const std::string& name, bool rerun) const;
    void end(const std::string& name, const Json& output) const;
    Error failed(const std::string& name, const Error& e) const;
    bool rerun_requested(const std::string& name, const Json& output);

    const Gateway* gateway_;
    SearchAugmentor* search_;
    const RunConfig* config_;
    const PromptLibrary* prompts_;
    TraceRecorder* trace_;
    EventBuffer* buffer_ = nullptr;
    Phase phase_ = Phase::Discovery;
    std::vector<HumanDirective> directives_;
    BoundaryHook hook_;
    long long boundaries_ = 0;
};

/// "- item" lines, or "(none)".
std::string bullet_list(const std::vector<std::string>& items);
std::string render_evidence(const std::vector<EvidenceItem>& evidence);

} // namespace u2f
