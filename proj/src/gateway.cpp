#include "u2f/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <thread>

#include "u2f/text.hpp"

namespace u2f {

void SteadyClock::sleep_for(Millis d) { std::this_thread::sleep_for(d); }

Clock& default_clock() {
    static SteadyClock clock;
    return clock;
}

// --- ChatRequest ---------------------------------------------------------------

ChatRequest::ChatRequest(std::string stage_tag, std::string system_prompt, std::string user_prompt,
                         double temperature, int max_tokens)
    : stage_tag_(std::move(stage_tag)),
      system_prompt_(std::move(system_prompt)),
      user_prompt_(std::move(user_prompt)),
      temperature_(temperature),
      max_tokens_(max_tokens) {
    if (text::trim(stage_tag_).empty()) fail(ErrorCode::InvalidValue, "chat request without stage_tag");
    if (text::trim(system_prompt_).empty() || text::trim(user_prompt_).empty()) {
        fail(ErrorCode::InvalidValue, "chat request with empty prompt (" + stage_tag_ + ")");
    }
    if (!(temperature_ >= 0.0)) fail(ErrorCode::InvalidValue, "temperature must be >= 0");
    if (max_tokens_ <= 0) fail(ErrorCode::InvalidValue, "max_tokens must be > 0");
}

ChatRequest ChatRequest::with_user_prompt(std::string user_prompt) const {
    return ChatRequest(stage_tag_, system_prompt_, std::move(user_prompt), temperature_, max_tokens_);
}

void to_json(Json& j, const ChatRequest& r) {
    j = Json{{"stage_tag", r.stage_tag()},
             {"system_prompt", r.system_prompt()},
             {"user_prompt", r.user_prompt()},
             {"temperature", r.temperature()},
             {"max_tokens", r.max_tokens()}};
}

ChatRequest chat_request_from_json(const Json& j) {
    return ChatRequest(j.at("stage_tag").get<std::string>(), j.at("system_prompt").get<std::string>(),
                       j.at("user_prompt").get<std::string>(), j.value("temperature", 0.2),
                       j.value("max_tokens", 1024));
}

void to_json(Json& j, const ChatResponse& r) {
    j = Json{{"text", r.text},
             {"provider_id", r.provider_id},
             {"latency_ms", r.latency_ms},
             {"token_usage", {{"input", r.token_usage.input}, {"output", r.token_usage.output}}}};
}

void from_json(const Json& j, ChatResponse& r) {
    r.text = j.at("text").get<std::string>();
    r.provider_id = j.value("provider_id", std::string{});
    r.latency_ms = j.value("latency_ms", 0LL);
    if (j.contains("token_usage")) {
        r.token_usage.input = j.at("token_usage").value("input", 0);
        r.token_usage.output = j.at("token_usage").value("output", 0);
    }
}

double default_temperature(std::string_view stage_tag) {
    return stage_tag.rfind("exploration.", 0) == 0 ? 0.7 : 0.2;
}

// --- ProviderConfig ------------------------------------------------------------

void ProviderConfig::apply_environment() {
    if (const char* v = std::getenv("U2F_API_BASE")) base_url = v;
    if (const char* v = std::getenv("U2F_API_KEY")) api_key = v;
    if (const char* v = std::getenv("U2F_MODEL")) model = v;
    if (const char* v = std::getenv("U2F_DEADLINE_MS")) deadline = Millis(std::atoll(v));
}

void ProviderConfig::apply_json(const Json& j) {
    if (j.contains("id")) id = j.at("id").get<std::string>();
    if (j.contains("base_url")) base_url = j.at("base_url").get<std::string>();
    if (j.contains("api_key")) api_key = j.at("api_key").get<std::string>();
    if (j.contains("model")) model = j.at("model").get<std::string>();
    if (j.contains("deadline_ms")) deadline = Millis(j.at("deadline_ms").get<long long>());
}

// --- RateLimiter ------------------------------------------------------------------

RateLimiter::RateLimiter(double per_second, double burst, Clock& clock)
    : per_second_(per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(clock.now()), clock_(clock) {}

void RateLimiter::acquire() {
    if (per_second_ <= 0.0) return;
    Millis wait{0};
    {
        std::lock_guard lock(mutex_);
        const auto now = clock_.now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(burst_, tokens_ + elapsed * per_second_);
        tokens_ -= 1.0;
        if (tokens_ < 0.0) wait = Millis(static_cast<long long>(-tokens_ / per_second_ * 1000.0 + 0.5));
    }
    if (wait.count() > 0) clock_.sleep_for(wait);
}

// --- Gateway -------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<ChatProvider> provider, GatewayConfig config, Clock* clock)
    : provider_(std::move(provider)),
      config_(config),
      clock_(clock ? clock : &default_clock()),
      limiter_(std::make_unique<RateLimiter>(config.requests_per_second, config.burst, *clock_)) {
    if (!provider_) fail(ErrorCode::InvalidValue, "gateway needs a provider");
}

ChatResponse Gateway::call_with_deadline(const ChatRequest& request) const {
    if (!provider_->may_block()) return provider_->complete(request);

    // The worker owns copies of everything it touches so an abandoned call
    // can finish after the gateway has given up on it.
    auto task = std::make_shared<std::packaged_task<ChatResponse()>>(
        [provider = provider_, request] { return provider->complete(request); });
    auto future = task->get_future();
    std::thread([task] { (*task)(); }).detach();

    const auto start = clock_->now();
    for (;;) {
        const auto elapsed = std::chrono::duration_cast<Millis>(clock_->now() - start);
        if (elapsed >= config_.deadline) {
            fail(ErrorCode::Timeout, request.stage_tag() + " exceeded deadline of " +
                                         std::to_string(config_.deadline.count()) + " ms (elapsed " +
                                         std::to_string(elapsed.count()) + " ms)");
        }
        if (future.wait_for(clock_->wait_slice(config_.deadline - elapsed)) == std::future_status::ready) {
            return future.get();
        }
        clock_->on_idle();
    }
}

ChatResponse Gateway::complete(const ChatRequest& request, const CallObserver& observer) const {
    int rate_limit_retries = 0;
    for (;;) {
        limiter_->acquire();
        const auto start = clock_->now();
        try {
            ChatResponse response = call_with_deadline(request);
            if (response.provider_id.empty()) response.provider_id = provider_->id();
            if (response.latency_ms == 0) {
                response.latency_ms = std::chrono::duration_cast<Millis>(clock_->now() - start).count();
            }
            if (observer) observer(request, &response, nullptr);
            return response;
        } catch (const RateLimitedError& e) {
            if (rate_limit_retries < config_.max_rate_limit_retries) {
                ++rate_limit_retries;
                clock_->sleep_for(e.retry_after());
                continue;
            }
            if (observer) observer(request, nullptr, &e);
            throw;
        } catch (const Error& e) {
            if (observer) observer(request, nullptr, &e);
            throw;
        }
    }
}

std::string repair_prompt(const std::string& original_user_prompt, const std::string& problem) {
    return original_user_prompt + "\n\n" + std::string(kRepairMarker) + " your previous answer could not be used (" +
           problem + "). Answer again, following the required format exactly.";
}

StructuredResult Gateway::complete_structured(const ChatRequest& request, const FieldSchema& schema, int max_repairs,
                                              const CallObserver& observer, const RecordCheck& check,
                                              ErrorCode check_code) const {
    const std::string base_prompt = request.user_prompt() + "\n\n" + schema.format_block();
    ChatRequest attempt = request.with_user_prompt(base_prompt);
    std::string last_raw;
    std::string last_problem;
    bool check_failed = false;
    for (int i = 0; i <= std::max(0, max_repairs); ++i) {
        const ChatResponse response = complete(attempt, observer);
        last_raw = response.text;
        auto parsed = parse_structured(response.text, schema);
        check_failed = false;
        if (parsed.record && check) {
            if (auto problem = check(*parsed.record); !problem.empty()) {
                parsed.problem = std::move(problem);
                parsed.record.reset();
                check_failed = true;
            }
        }
        if (parsed.record) return {std::move(*parsed.record), i, response.text};
        last_problem = parsed.problem;
        attempt = request.with_user_prompt(repair_prompt(base_prompt, last_problem));
    }
    fail(check_failed ? check_code : ErrorCode::SchemaViolation,
         request.stage_tag() + ": " + last_problem + " after " + std::to_string(max_repairs + 1) +
             " attempts; raw: " + last_raw.substr(0, 400));
}

} // namespace u2f
