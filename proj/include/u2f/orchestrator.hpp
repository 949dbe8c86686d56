#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "u2f/exploration.hpp"
#include "u2f/integration.hpp"
#include "u2f/stage.hpp"

namespace u2f {

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

enum class SignalKind {
    Continue,
    ResetToDiscovery,
    DeferToIntegration,
    Done,
    DemandDeeperExploration,
    StrategicReset,
    /// A stage failed; the run ends.
    Abort,
};
std::string to_string(SignalKind k);
std::optional<SignalKind> parse_signal_kind(std::string_view s);
inline constexpr std::array<SignalKind, 7> kAllSignals{
    SignalKind::Continue,     SignalKind::ResetToDiscovery,        SignalKind::DeferToIntegration, SignalKind::Done,
    SignalKind::DemandDeeperExploration, SignalKind::StrategicReset, SignalKind::Abort};

struct ControlSignal {
    SignalKind kind = SignalKind::Continue;
    std::string reason;
    std::vector<std::string> uu_ids;
};
void to_json(Json& j, const ControlSignal& s);

struct PipelineState {
    Phase phase = Phase::Discovery;
    int reset_count = 0;
    int deepen_count = 0;
    std::optional<StrategicBrief> brief;
    std::optional<ExplorationReport> report;
    std::optional<IntegratedSolution> solution;
    std::vector<HumanDirective> directives;
    /// Why the run failed (set only in Failed).
    std::string failure_reason;

    [[nodiscard]] bool terminal() const { return phase == Phase::Done || phase == Phase::Failed; }
    bool operator==(const PipelineState&) const = default;
};

/// Pure transition function. Throws TerminalState on a terminal state and
/// IllegalTransition for a (phase, signal) pair outside the table.
PipelineState step(const PipelineState& state, const ControlSignal& signal, const RunConfig& config);

/// Appends a directive. Throws TerminalState on a finished run.
PipelineState apply_directive(const PipelineState& state, const HumanDirective& directive);

// ---------------------------------------------------------------------------
// Human interaction
// ---------------------------------------------------------------------------

/// Delivers directives into the run at sub-stage boundaries.
class InteractionChannel {
public:
    virtual ~InteractionChannel() = default;
    virtual std::vector<HumanDirective> at_boundary(const BoundaryInfo& info) = 0;
};

/// Directives queued for named sub-stages; each is delivered at the first
/// boundary of that sub-stage (and phase, when given).
class ScriptedChannel final : public InteractionChannel {
public:
    ScriptedChannel& at(std::string stage, HumanDirective d, std::optional<Phase> phase = std::nullopt);
    std::vector<HumanDirective> at_boundary(const BoundaryInfo& info) override;
    [[nodiscard]] std::size_t pending() const { return items_.size(); }

private:
    struct Item {
        std::string stage;
        std::optional<Phase> phase;
        HumanDirective directive;
    };
    std::vector<Item> items_;
};

/// Thread-safe inbox fed by the HTTP API. Boundaries named in the await set
/// block until a directive arrives, the channel is released, or the wait
/// times out, so a client can intervene deterministically.
class QueueChannel final : public InteractionChannel {
public:
    explicit QueueChannel(std::set<std::string> await_stages = {}, Millis await_timeout = Millis(60000));

    void push(HumanDirective d);
    /// Ends every current and future wait.
    void release();
    std::vector<HumanDirective> at_boundary(const BoundaryInfo& info) override;

    /// The stage currently awaiting input, if any.
    [[nodiscard]] std::optional<std::string> waiting_at() const;

private:
    std::set<std::string> await_;
    Millis timeout_;
    std::deque<HumanDirective> queue_;
    bool released_ = false;
    std::optional<std::string> waiting_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
};

/// Prompts on a terminal at every boundary. Lines use the shorthand
/// `<kind> [@phase]: <content>`; an empty line continues the run.
class TerminalChannel final : public InteractionChannel {
public:
    TerminalChannel(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
    std::vector<HumanDirective> at_boundary(const BoundaryInfo& info) override;

private:
    std::istream& in_;
    std::ostream& out_;
};

// ---------------------------------------------------------------------------
// Running cases
// ---------------------------------------------------------------------------

/// The terminal outcome of one case.
struct CaseResult {
    std::string case_id;
    Mode mode = Mode::U2F;
    std::string variant = "Full";
    Phase status = Phase::Done;
    std::string failure_reason;
    /// {code, stage, detail} of the error that ended the run, if any.
    std::optional<Json> error;
    /// The story's proposed fix: the solution the pipeline started from.
    std::string initial_solution;
    std::optional<StrategicBrief> brief;
    std::vector<UURecord> uus;
    std::optional<IntegratedSolution> solution;
    /// Output of a baseline mode.
    std::string baseline_output;
    /// IntegratedSolution, BriefAndUUs, StrategicBrief, BaselineSolution or None.
    std::string deliverable = "None";
    std::vector<std::string> phase_sequence;
    int reset_count = 0;
    int deepen_count = 0;

    bool operator==(const CaseResult&) const = default;
};

void to_json(Json& j, const CaseResult& r);
void from_json(const Json& j, CaseResult& r);
/// Canonical bytes of a result; replay compares these.
std::string canonical_result(const CaseResult& r);

/// Text of the final deliverable, used for semantic novelty.
std::string solution_text(const CaseResult& r);

/// Backends for a run. The search provider may be null.
struct RunServices {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<SearchProvider> search;
    GatewayConfig gateway;
    Clock* clock = nullptr;
    const PromptLibrary* prompts = nullptr;
};

struct RunOptions {
    InteractionChannel* channel = nullptr;
    /// JSON-Lines trace written as events happen.
    std::optional<std::string> trace_path;
    /// Externally owned recorder (the HTTP service subscribes to it);
    /// overrides trace_path.
    TraceRecorder* recorder = nullptr;
};

struct CaseOutcome {
    CaseResult result;
    RunTrace trace;
};

/// Runs one case to Done or Failed. Never throws for stage failures: they
/// end the run as Failed with the error recorded. Invalid configuration
/// throws.
CaseOutcome run_case(const EnablerStory& story, const RunConfig& config, const RunServices& services,
                     const RunOptions& options = {});

/// Phases entered, in order, as recorded in a trace.
std::vector<std::string> phase_sequence(const RunTrace& trace);

/// Upper bound on executions of any one phase kind.
inline int max_phase_executions(const RunConfig& c) { return 1 + 2 * c.max_resets + c.max_deepens; }

struct BatchSummary {
    std::vector<CaseResult> results;
    int failed = 0;
};

/// Runs cases concurrently (pool_size workers), writing `<id>.trace.jsonl`
/// and `<id>.result.json` per case plus `results.jsonl` into out_dir.
BatchSummary run_batch(const std::vector<EnablerStory>& stories, const RunConfig& config, const RunServices& services,
                       const std::string& out_dir, int pool_size = 4);

} // namespace u2f
