#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "u2f/clock.hpp"
#include "u2f/domain.hpp"
#include "u2f/structured.hpp"

namespace u2f {

/// One stateless chat completion request. Every request names the agent stage
/// that issued it; construction fails without one.
class ChatRequest {
public:
    ChatRequest(std::string stage_tag, std::string system_prompt, std::string user_prompt,
                double temperature = 0.2, int max_tokens = 1024);

    [[nodiscard]] const std::string& stage_tag() const { return stage_tag_; }
    [[nodiscard]] const std::string& system_prompt() const { return system_prompt_; }
    [[nodiscard]] const std::string& user_prompt() const { return user_prompt_; }
    [[nodiscard]] double temperature() const { return temperature_; }
    [[nodiscard]] int max_tokens() const { return max_tokens_; }

    [[nodiscard]] ChatRequest with_user_prompt(std::string user_prompt) const;

    bool operator==(const ChatRequest&) const = default;

private:
    std::string stage_tag_;
    std::string system_prompt_;
    std::string user_prompt_;
    double temperature_;
    int max_tokens_;
};

struct TokenUsage {
    int input = 0;
    int output = 0;
    bool operator==(const TokenUsage&) const = default;
};

struct ChatResponse {
    std::string text;
    std::string provider_id;
    long long latency_ms = 0;
    TokenUsage token_usage;
};

void to_json(Json& j, const ChatRequest& r);
ChatRequest chat_request_from_json(const Json& j);
void to_json(Json& j, const ChatResponse& r);
void from_json(const Json& j, ChatResponse& r);

/// Stage-dependent decoding default: divergent exploration stages get 0.7,
/// everything else 0.2.
double default_temperature(std::string_view stage_tag);

/// Thrown by providers on HTTP 429; the gateway honours retry_after.
class RateLimitedError : public Error {
public:
    RateLimitedError(Millis retry_after, std::string detail)
        : Error(ErrorCode::RateLimited, std::move(detail)), retry_after_(retry_after) {}
    [[nodiscard]] Millis retry_after() const { return retry_after_; }

private:
    Millis retry_after_;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
    /// Non-blocking providers run inline; blocking ones on a worker thread so
    /// the deadline can fire while the call is still outstanding.
    [[nodiscard]] virtual bool may_block() const { return true; }
};

/// Endpoint, key and model for a live OpenAI-compatible provider.
struct ProviderConfig {
    std::string id = "openai-compatible";
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string model = "gpt-4o";
    Millis deadline{30000};

    /// Overlays U2F_API_BASE, U2F_API_KEY, U2F_MODEL and U2F_DEADLINE_MS.
    void apply_environment();
    void apply_json(const Json& j);
};

/// Token bucket shared by every caller of one provider.
class RateLimiter {
public:
    /// `per_second` <= 0 disables limiting.
    RateLimiter(double per_second, double burst, Clock& clock);
    void acquire();

private:
    double per_second_;
    double burst_;
    double tokens_;
    Clock::TimePoint last_;
    Clock& clock_;
    std::mutex mutex_;
};

struct GatewayConfig {
    Millis deadline{30000};
    Millis grace{250};
    int max_rate_limit_retries = 3;
    double requests_per_second = 0.0;
    double burst = 4.0;
};

/// Receives every request with its response or error, in call order.
using CallObserver = std::function<void(const ChatRequest&, const ChatResponse*, const Error*)>;

/// Extra semantic check on a parsed record; returns a problem description or
/// an empty string when the record is acceptable.
using RecordCheck = std::function<std::string(const Json&)>;

struct StructuredResult {
    Json record;
    int repairs = 0;
    std::string raw_text;
};

/// Provider-agnostic completion access. Holds no conversation state; the rate
/// limiter is its only shared mutable state.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<ChatProvider> provider, GatewayConfig config = {},
                     Clock* clock = nullptr);

    ChatResponse complete(const ChatRequest& request, const CallObserver& observer = {}) const;

    /// Appends the schema's format block to the prompt and parses the answer,
    /// re-prompting with a repair instruction up to `max_repairs` times.
    /// When the final attempt parsed but failed `check`, the error code is
    /// `check_code` instead of SchemaViolation.
    StructuredResult complete_structured(const ChatRequest& request, const FieldSchema& schema, int max_repairs,
                                         const CallObserver& observer = {}, const RecordCheck& check = {},
                                         ErrorCode check_code = ErrorCode::SchemaViolation) const;

    [[nodiscard]] const ChatProvider& provider() const { return *provider_; }
    [[nodiscard]] const GatewayConfig& config() const { return config_; }

private:
    ChatResponse call_with_deadline(const ChatRequest& request) const;

    std::shared_ptr<ChatProvider> provider_;
    GatewayConfig config_;
    Clock* clock_;
    std::unique_ptr<RateLimiter> limiter_;
};

/// Marker prefixed to the repair instruction; mock scripts can match on it.
inline constexpr std::string_view kRepairMarker = "REPAIR REQUEST:";

std::string repair_prompt(const std::string& original_user_prompt, const std::string& problem);

} // namespace u2f
