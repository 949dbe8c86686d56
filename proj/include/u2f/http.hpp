#pragma once

#include <map>
#include <string>

#include "u2f/clock.hpp"
#include "u2f/gateway.hpp"

namespace u2f {

struct HttpResult {
    int status = 0;  ///< 0 when no response arrived
    std::string body;
    std::map<std::string, std::string> headers;
    std::string transport_error;  ///< set when status == 0
    bool timed_out = false;
};

/// Minimal client over cpp-httplib; `url` is absolute (http or https).
HttpResult http_request(const std::string& method, const std::string& url,
                        const std::map<std::string, std::string>& headers, const std::string& body, Millis timeout);

/// Chat completions against an OpenAI-compatible `/chat/completions` endpoint.
class OpenAiChatProvider final : public ChatProvider {
public:
    explicit OpenAiChatProvider(ProviderConfig config) : config_(std::move(config)) {}

    ChatResponse complete(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return config_.id + ":" + config_.model; }

private:
    ProviderConfig config_;
};

/// Maps an HTTP outcome onto the gateway error vocabulary (Timeout,
/// RateLimited with Retry-After, ProviderError with a body excerpt).
void raise_for_http(const HttpResult& r, const std::string& what);

} // namespace u2f
