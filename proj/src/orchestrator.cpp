#include "u2f/orchestrator.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "u2f/discovery.hpp"
#include "u2f/text.hpp"

namespace u2f {

namespace {

constexpr std::array<std::pair<SignalKind, const char*>, 7> kSignals{{
    {SignalKind::Continue, "Continue"},
    {SignalKind::ResetToDiscovery, "ResetToDiscovery"},
    {SignalKind::DeferToIntegration, "DeferToIntegration"},
    {SignalKind::Done, "Done"},
    {SignalKind::DemandDeeperExploration, "DemandDeeperExploration"},
    {SignalKind::StrategicReset, "StrategicReset"},
    {SignalKind::Abort, "Abort"},
}};

[[noreturn]] void illegal(const PipelineState& s, const ControlSignal& sig) {
    fail(ErrorCode::IllegalTransition, "(" + to_string(s.phase) + ", " + to_string(sig.kind) + ")");
}

PipelineState reset_or_fail(PipelineState next, const RunConfig& config) {
    if (next.reset_count >= config.max_resets) {
        next.phase = Phase::Failed;
        next.failure_reason = "reset cap";
        return next;
    }
    ++next.reset_count;
    next.phase = Phase::Discovery;
    return next;
}

} // namespace

std::string to_string(SignalKind k) {
    for (const auto& [v, n] : kSignals) {
        if (v == k) return n;
    }
    return "?";
}

std::optional<SignalKind> parse_signal_kind(std::string_view s) {
    for (const auto& [v, n] : kSignals) {
        if (s == n) return v;
    }
    return std::nullopt;
}

void to_json(Json& j, const ControlSignal& s) {
    j = Json{{"kind", to_string(s.kind)}, {"reason", s.reason}, {"uu_ids", s.uu_ids}};
}

PipelineState step(const PipelineState& state, const ControlSignal& signal, const RunConfig& config) {
    if (state.terminal()) fail(ErrorCode::TerminalState, "step on " + to_string(state.phase));
    PipelineState next = state;
    if (signal.kind == SignalKind::Abort) {
        next.phase = Phase::Failed;
        next.failure_reason = signal.reason.empty() ? "aborted" : signal.reason;
        return next;
    }
    const bool explore = config.stage_enabled(Phase::Exploration);
    const bool integrate = config.stage_enabled(Phase::Integration);
    switch (state.phase) {
    case Phase::Discovery:
        if (signal.kind != SignalKind::Continue) illegal(state, signal);
        next.phase = explore ? Phase::Exploration : integrate ? Phase::Integration : Phase::Done;
        return next;
    case Phase::Exploration:
        switch (signal.kind) {
        case SignalKind::Continue:
        case SignalKind::DeferToIntegration: next.phase = integrate ? Phase::Integration : Phase::Done; return next;
        case SignalKind::ResetToDiscovery: return reset_or_fail(std::move(next), config);
        default: illegal(state, signal);
        }
    case Phase::Integration:
        switch (signal.kind) {
        case SignalKind::Done: next.phase = Phase::Done; return next;
        case SignalKind::StrategicReset: return reset_or_fail(std::move(next), config);
        case SignalKind::DemandDeeperExploration:
            if (!explore) {
                next.phase = Phase::Failed;
                next.failure_reason = "deeper exploration requested but exploration is disabled";
            } else if (next.deepen_count >= config.max_deepens) {
                next.phase = Phase::Failed;
                next.failure_reason = "deepen cap";
            } else {
                ++next.deepen_count;
                next.phase = Phase::Exploration;
            }
            return next;
        default: illegal(state, signal);
        }
    default: illegal(state, signal);
    }
}

PipelineState apply_directive(const PipelineState& state, const HumanDirective& directive) {
    if (state.terminal()) fail(ErrorCode::TerminalState, "run already " + to_string(state.phase));
    validate_directive(directive);
    PipelineState next = state;
    next.directives.push_back(directive);
    return next;
}

// --- channels ------------------------------------------------------------------------

ScriptedChannel& ScriptedChannel::at(std::string stage, HumanDirective d, std::optional<Phase> phase) {
    items_.push_back({std::move(stage), phase, std::move(d)});
    return *this;
}

std::vector<HumanDirective> ScriptedChannel::at_boundary(const BoundaryInfo& info) {
    std::vector<HumanDirective> out;
    for (auto it = items_.begin(); it != items_.end();) {
        if (it->stage == info.stage && (!it->phase || *it->phase == info.phase)) {
            out.push_back(it->directive);
            it = items_.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

QueueChannel::QueueChannel(std::set<std::string> await_stages, Millis await_timeout)
    : await_(std::move(await_stages)), timeout_(await_timeout) {}

void QueueChannel::push(HumanDirective d) {
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(d));
    }
    cv_.notify_all();
}

void QueueChannel::release() {
    {
        std::lock_guard lock(mutex_);
        released_ = true;
    }
    cv_.notify_all();
}

std::vector<HumanDirective> QueueChannel::at_boundary(const BoundaryInfo& info) {
    std::unique_lock lock(mutex_);
    if (!released_ && await_.erase(info.stage) > 0) {
        waiting_ = info.stage;
        cv_.wait_for(lock, timeout_, [&] { return !queue_.empty() || released_; });
        waiting_.reset();
    }
    std::vector<HumanDirective> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
}

std::optional<std::string> QueueChannel::waiting_at() const {
    std::lock_guard lock(mutex_);
    return waiting_;
}

std::vector<HumanDirective> TerminalChannel::at_boundary(const BoundaryInfo& info) {
    std::string summary = info.output.dump();
    if (summary.size() > 400) summary = summary.substr(0, 400) + "...";
    out_ << "\n-- boundary " << info.index << ": " << to_string(info.phase) << " / " << info.stage << "\n"
         << summary << "\n"
         << "Enter directives as '<kind> [@phase]: <content>' (kinds: pref, taboo, goal, feedback, redirect);"
         << " empty line continues.\n";
    std::vector<HumanDirective> out;
    std::string line;
    while (true) {
        out_ << "directive> " << std::flush;
        if (!std::getline(in_, line) || text::trim(line).empty()) break;
        try {
            out.push_back(parse_directive_command(line));
            out_ << "accepted: " << to_string(out.back().kind) << " @" << to_string(out.back().target_phase) << "\n";
        } catch (const Error& e) {
            out_ << "rejected: " << e.detail() << "\n";
        }
    }
    return out;
}

// --- results ----------------------------------------------------------------------------

void to_json(Json& j, const CaseResult& r) {
    j = Json{{"case_id", r.case_id},
             {"mode", to_string(r.mode)},
             {"variant", r.variant},
             {"status", to_string(r.status)},
             {"failure_reason", r.failure_reason},
             {"error", r.error ? *r.error : Json(nullptr)},
             {"initial_solution", r.initial_solution},
             {"brief", r.brief ? Json(*r.brief) : Json(nullptr)},
             {"uus", r.uus},
             {"solution", r.solution ? Json(*r.solution) : Json(nullptr)},
             {"baseline_output", r.baseline_output},
             {"deliverable", r.deliverable},
             {"phase_sequence", r.phase_sequence},
             {"reset_count", r.reset_count},
             {"deepen_count", r.deepen_count}};
}

void from_json(const Json& j, CaseResult& r) {
    CaseResult out;
    out.case_id = j.at("case_id").get<std::string>();
    auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode) fail(ErrorCode::InvalidValue, "mode " + j.at("mode").dump());
    out.mode = *mode;
    out.variant = j.value("variant", std::string("Full"));
    auto status = parse_phase(j.at("status").get<std::string>());
    if (!status) fail(ErrorCode::InvalidValue, "status " + j.at("status").dump());
    out.status = *status;
    out.failure_reason = j.value("failure_reason", std::string{});
    if (j.contains("error") && !j.at("error").is_null()) out.error = j.at("error");
    out.initial_solution = j.value("initial_solution", std::string{});
    if (j.contains("brief") && !j.at("brief").is_null()) out.brief = j.at("brief").get<StrategicBrief>();
    out.uus = j.value("uus", std::vector<UURecord>{});
    if (j.contains("solution") && !j.at("solution").is_null()) out.solution = j.at("solution").get<IntegratedSolution>();
    out.baseline_output = j.value("baseline_output", std::string{});
    out.deliverable = j.value("deliverable", std::string("None"));
    out.phase_sequence = j.value("phase_sequence", std::vector<std::string>{});
    out.reset_count = j.value("reset_count", 0);
    out.deepen_count = j.value("deepen_count", 0);
    r = std::move(out);
}

std::string canonical_result(const CaseResult& r) { return Json(r).dump(); }

std::string solution_text(const CaseResult& r) {
    if (r.solution) return r.solution->overview;
    if (!r.baseline_output.empty()) return r.baseline_output;
    if (r.brief) return r.brief->baseline_solution;
    return {};
}

std::vector<std::string> phase_sequence(const RunTrace& trace) {
    std::vector<std::string> out;
    for (const auto& e : trace.events) {
        if (e.kind == EventKind::StageStart && e.payload.value("level", std::string{}) == "phase") {
            out.push_back(e.payload.at("phase").get<std::string>());
        }
    }
    return out;
}

// --- run_case ---------------------------------------------------------------------------

namespace {

std::string baseline_template(Mode m) {
    switch (m) {
    case Mode::ZeroShot: return "baseline.zeroshot";
    case Mode::RoleBased: return "baseline.rolebased";
    case Mode::SEAP: return "baseline.seap";
    case Mode::U2F: break;
    }
    fail(ErrorCode::InvalidValue, "not a baseline mode");
}

Json error_json(const Error& e) {
    return Json{{"code", std::string(to_string(e.code()))}, {"stage", e.stage()}, {"detail", e.detail()}};
}

ControlSignal exploration_signal(const ExplorationControl& c) {
    switch (c.kind) {
    case ExplorationControlKind::ResetToDiscovery: return {SignalKind::ResetToDiscovery, c.reason, c.uu_ids};
    case ExplorationControlKind::DeferToIntegration: return {SignalKind::DeferToIntegration, c.reason, c.uu_ids};
    case ExplorationControlKind::Continue: break;
    }
    return {SignalKind::Continue, c.reason, {}};
}

ControlSignal integration_signal(const IntegrationOutcome& o) {
    switch (o.control) {
    case IntegrationControl::Done: return {SignalKind::Done, o.reason, {}};
    case IntegrationControl::DemandDeeperExploration: return {SignalKind::DemandDeeperExploration, o.reason, {}};
    case IntegrationControl::StrategicReset: return {SignalKind::StrategicReset, o.reason, {}};
    }
    return {SignalKind::Abort, "unknown integration control", {}};
}

void run_baseline(const EnablerStory& story, const StageContext& ctx, TraceRecorder& rec, CaseResult& result) {
    const auto tmpl = baseline_template(ctx.config().mode);
    rec.append(EventKind::StageStart, Json{{"level", "phase"}, {"phase", "Baseline"}});
    result.phase_sequence.push_back("Baseline");
    try {
        const auto p = ctx.prompts().render(tmpl, story_vars(story));
        const ChatRequest req(tmpl, p.system, p.user, default_temperature(tmpl), 2048);
        result.baseline_output = text::trim(ctx.gateway().complete(req, ctx.call_observer()).text);
        if (result.baseline_output.empty()) fail(ErrorCode::EmptyStatement, tmpl + " returned an empty solution");
        result.status = Phase::Done;
        result.deliverable = "BaselineSolution";
    } catch (const Error& e) {
        const auto err = e.stage().empty() ? e.with_stage(tmpl) : e;
        rec.append(EventKind::Error, Json{{"phase", "Baseline"}, {"stage", tmpl}, {"code", std::string(to_string(e.code()))},
                                          {"detail", e.detail()}});
        result.status = Phase::Failed;
        result.failure_reason = err.what();
        result.error = error_json(err);
    }
    rec.append(EventKind::StageEnd, Json{{"level", "phase"}, {"phase", "Baseline"}});
}

} // namespace

CaseOutcome run_case(const EnablerStory& story, const RunConfig& config, const RunServices& services,
                     const RunOptions& options) {
    if (!services.chat) fail(ErrorCode::InvalidValue, "run_case needs a chat provider");
    if (!config.stage_enabled(Phase::Discovery)) fail(ErrorCode::InvalidValue, "Discovery cannot be disabled");
    if (config.max_resets < 0 || config.max_deepens < 0) fail(ErrorCode::InvalidValue, "loop caps must be >= 0");

    Gateway gateway(services.chat, services.gateway, services.clock);
    std::unique_ptr<SearchAugmentor> search;
    if (config.search_enabled && services.search) {
        search = std::make_unique<SearchAugmentor>(services.search, config.search_max_results);
    }
    std::unique_ptr<TraceRecorder> owned;
    TraceRecorder* rec = options.recorder;
    if (!rec) {
        owned = std::make_unique<TraceRecorder>(story.id, config, options.trace_path);
        rec = owned.get();
    }
    const PromptLibrary& prompts = services.prompts ? *services.prompts : PromptLibrary::defaults();
    StageContext ctx(gateway, search.get(), config, prompts, rec);

    rec->append(EventKind::StageStart, Json{{"level", "run"}, {"stage", "run_case"}, {"mode", to_string(config.mode)},
                                            {"variant", config.variant}, {"story", story}});

    CaseResult result;
    result.case_id = story.id;
    result.mode = config.mode;
    result.variant = config.variant;
    result.initial_solution = story.potential_fix;

    if (config.mode != Mode::U2F) {
        run_baseline(story, ctx, *rec, result);
    } else {
        PipelineState state;
        ctx.set_boundary_hook([&](const BoundaryInfo& info) {
            std::vector<HumanDirective> accepted;
            if (!options.channel) return accepted;
            for (auto& d : options.channel->at_boundary(info)) {
                try {
                    state = apply_directive(state, d);
                } catch (const Error& e) {
                    rec->append(EventKind::Error, Json{{"phase", to_string(info.phase)},
                                                       {"stage", "directive"},
                                                       {"code", std::string(to_string(e.code()))},
                                                       {"detail", e.detail()}});
                    continue;
                }
                ctx.add_directive(d);
                rec->append(EventKind::Directive, Json{{"source", "human"},
                                                       {"boundary", info.index},
                                                       {"phase", to_string(info.phase)},
                                                       {"stage", info.stage},
                                                       {"directive", d}});
                accepted.push_back(d);
            }
            return accepted;
        });
        auto inject = [&](HumanDirective d) {
            state = apply_directive(state, d);
            ctx.add_directive(d);
            rec->append(EventKind::Directive, Json{{"source", "orchestrator"}, {"directive", d}});
        };

        while (!state.terminal()) {
            const Phase phase = state.phase;
            rec->append(EventKind::StageStart, Json{{"level", "phase"}, {"phase", to_string(phase)}});
            result.phase_sequence.push_back(to_string(phase));
            ControlSignal signal;
            try {
                switch (phase) {
                case Phase::Discovery:
                    state.brief = run_discovery(story, ctx);
                    state.report.reset();
                    state.solution.reset();
                    signal = {SignalKind::Continue, {}, {}};
                    break;
                case Phase::Exploration:
                    state.report = run_exploration(story, *state.brief, ctx);
                    signal = exploration_signal(state.report->control);
                    break;
                case Phase::Integration: {
                    const auto uus = state.report ? state.report->uus : std::vector<UURecord>{};
                    auto outcome = run_integration(*state.brief, uus, ctx);
                    signal = integration_signal(outcome);
                    if (signal.kind == SignalKind::Done) {
                        if (!outcome.solution.complete()) {
                            fail(ErrorCode::IncompletePlan,
                                 "deliverable missing: " + text::join(outcome.solution.missing_parts(), ", "));
                        }
                        state.solution = std::move(outcome.solution);
                    }
                    break;
                }
                default: fail(ErrorCode::IllegalTransition, "run loop in " + to_string(phase));
                }
            } catch (const Error& e) {
                signal = {SignalKind::Abort, e.what(), {}};
                result.error = error_json(e);
            }
            rec->append(EventKind::StageEnd, Json{{"level", "phase"}, {"phase", to_string(phase)}});
            PipelineState next = step(state, signal, config);
            rec->append(EventKind::ControlSignal, Json{{"from", to_string(phase)},
                                                       {"signal", signal},
                                                       {"to", to_string(next.phase)},
                                                       {"reset_count", next.reset_count},
                                                       {"deepen_count", next.deepen_count}});
            state = std::move(next);
            if (state.terminal()) break;
            if (state.phase == Phase::Discovery) {
                inject({DirectiveKind::RedirectPath, "Strategic reset: " + signal.reason, TargetPhase::All, {}, false});
            } else if (signal.kind == SignalKind::DemandDeeperExploration) {
                inject({DirectiveKind::RedirectPath, "Explore deeper: " + signal.reason, TargetPhase::Exploration, {},
                        false});
            }
        }

        result.status = state.phase;
        result.failure_reason = state.failure_reason;
        result.brief = state.brief;
        if (state.report) result.uus = state.report->uus;
        result.solution = state.solution;
        result.reset_count = state.reset_count;
        result.deepen_count = state.deepen_count;
        if (state.phase == Phase::Done) {
            result.deliverable = state.solution ? "IntegratedSolution" : state.report ? "BriefAndUUs" : "StrategicBrief";
        }
    }

    rec->append(EventKind::StageEnd, Json{{"level", "run"}, {"stage", "run_case"}, {"status", to_string(result.status)}});
    rec->set_result(Json(result));
    return {result, rec->snapshot()};
}

// --- batch ------------------------------------------------------------------------------

BatchSummary run_batch(const std::vector<EnablerStory>& stories, const RunConfig& config, const RunServices& services,
                       const std::string& out_dir, int pool_size) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::optional<CaseResult>> results(stories.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::optional<Error> first_error;

    auto worker = [&] {
        for (std::size_t i = next++; i < stories.size(); i = next++) {
            try {
                RunOptions opts;
                opts.trace_path = (fs::path(out_dir) / (stories[i].id + ".trace.jsonl")).string();
                auto outcome = run_case(stories[i], config, services, opts);
                std::ofstream(fs::path(out_dir) / (stories[i].id + ".result.json")) << Json(outcome.result).dump(2)
                                                                                     << "\n";
                results[i] = std::move(outcome.result);
            } catch (const Error& e) {
                std::lock_guard lock(err_mutex);
                if (!first_error) first_error = e;
            }
        }
    };
    const int n = std::max(1, std::min<int>(pool_size, static_cast<int>(stories.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) throw *first_error;

    BatchSummary summary;
    std::ofstream all(fs::path(out_dir) / "results.jsonl");
    for (auto& r : results) {
        all << Json(*r).dump() << "\n";
        if (r->status == Phase::Failed) ++summary.failed;
        summary.results.push_back(std::move(*r));
    }
    return summary;
}

} // namespace u2f
