#include <httplib.h>

#include "u2f/http.hpp"

#include <regex>

namespace u2f {

HttpResult http_request(const std::string& method, const std::string& url,
                        const std::map<std::string, std::string>& headers, const std::string& body, Millis timeout) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) fail(ErrorCode::InvalidValue, "bad url: " + url);
    const std::string origin = m[1].str();
    const std::string path = m[2].matched ? m[2].str() : "/";

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout).count() % 1000000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    httplib::Result res = method == "GET" ? client.Get(path, h) : client.Post(path, h, body, "application/json");
    HttpResult out;
    if (!res) {
        out.transport_error = httplib::to_string(res.error());
        out.timed_out = res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read;
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) out.headers[k] = v;
    return out;
}

void raise_for_http(const HttpResult& r, const std::string& what) {
    if (r.status == 0) {
        if (r.timed_out) fail(ErrorCode::Timeout, what + ": " + r.transport_error);
        fail(ErrorCode::ProviderError, what + ": transport error " + r.transport_error);
    }
    if (r.status == 429) {
        long long retry_ms = 1000;
        for (const auto& [k, v] : r.headers) {
            if (k == "Retry-After" || k == "retry-after") retry_ms = std::atoll(v.c_str()) * 1000;
        }
        throw RateLimitedError(Millis(retry_ms), what + ": HTTP 429");
    }
    if (r.status < 200 || r.status >= 300) {
        fail(ErrorCode::ProviderError, what + ": HTTP " + std::to_string(r.status) + " " + r.body.substr(0, 200));
    }
}

ChatResponse OpenAiChatProvider::complete(const ChatRequest& request) {
    const Json body{{"model", config_.model},
                    {"temperature", request.temperature()},
                    {"max_tokens", request.max_tokens()},
                    {"messages",
                     Json::array({{{"role", "system"}, {"content", request.system_prompt()}},
                                  {{"role", "user"}, {"content", request.user_prompt()}}})}};
    std::map<std::string, std::string> headers;
    if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;

    const auto started = std::chrono::steady_clock::now();
    const auto r = http_request("POST", config_.base_url + "/chat/completions", headers, body.dump(), config_.deadline);
    raise_for_http(r, id());

    const auto parsed = Json::parse(r.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
        fail(ErrorCode::ProviderError, id() + ": unexpected body " + r.body.substr(0, 200));
    }
    ChatResponse out;
    out.text = parsed["choices"][0]["message"].value("content", std::string{});
    out.provider_id = id();
    out.latency_ms = std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - started).count();
    if (parsed.contains("usage")) {
        out.token_usage.input = parsed["usage"].value("prompt_tokens", 0);
        out.token_usage.output = parsed["usage"].value("completion_tokens", 0);
    }
    if (out.text.empty()) fail(ErrorCode::ProviderError, id() + ": empty completion");
    return out;
}

} // namespace u2f
