#include "u2f/search.hpp"

#include <cstdlib>
#include <fstream>

#include "u2f/http.hpp"
#include "u2f/prompts.hpp"
#include "u2f/text.hpp"

namespace u2f {

namespace {

constexpr std::array<std::pair<SearchPurpose, const char*>, 6> kPurposes{{
    {SearchPurpose::ProbeWeakness, "ProbeWeakness"},
    {SearchPurpose::GroundAnalogy, "GroundAnalogy"},
    {SearchPurpose::ValidateF, "ValidateF"},
    {SearchPurpose::ValidateI, "ValidateI"},
    {SearchPurpose::ValidateC, "ValidateC"},
    {SearchPurpose::RefactorSupport, "RefactorSupport"},
}};

Component supported_component(SearchPurpose p) {
    switch (p) {
    case SearchPurpose::ValidateF: return Component::F;
    case SearchPurpose::ValidateI: return Component::I;
    default: return Component::C;
    }
}

std::string component_name(Component c) {
    switch (c) {
    case Component::F: return "technical feasibility";
    case Component::I: return "implementation viability";
    case Component::C: return "contextual appropriateness";
    }
    return "?";
}

std::string url_encode(std::string_view s) {
    static const char* kHex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 15]);
        }
    }
    return out;
}

std::vector<SearchHit> hits_from_json(const Json& arr) {
    std::vector<SearchHit> hits;
    for (const auto& r : arr) {
        SearchHit h;
        h.source = r.value("source_url_or_id", r.value("source", std::string{}));
        h.snippet = r.value("snippet", std::string{});
        h.retrieved_at = r.value("retrieved_at", std::string{});
        if (text::trim(h.snippet).empty()) fail(ErrorCode::InvalidValue, "search fixture result with empty snippet");
        hits.push_back(std::move(h));
    }
    return hits;
}

} // namespace

std::string to_string(SearchPurpose p) {
    for (const auto& [v, n] : kPurposes) {
        if (v == p) return n;
    }
    return "?";
}

std::optional<SearchPurpose> parse_search_purpose(std::string_view s) {
    for (const auto& [v, n] : kPurposes) {
        if (s == n) return v;
    }
    return std::nullopt;
}

SearchPurpose validation_purpose(Component c) {
    switch (c) {
    case Component::F: return SearchPurpose::ValidateF;
    case Component::I: return SearchPurpose::ValidateI;
    case Component::C: return SearchPurpose::ValidateC;
    }
    return SearchPurpose::ValidateF;
}

std::string to_string(Stance s) {
    switch (s) {
    case Stance::Supports: return "Supports";
    case Stance::Contradicts: return "Contradicts";
    case Stance::NoEvidence: return "NoEvidence";
    }
    return "?";
}

// --- SearchQuery -----------------------------------------------------------------

SearchQuery::SearchQuery(std::string query, SearchPurpose purpose, std::string issued_by)
    : query_(std::move(query)), purpose_(purpose), issued_by_(std::move(issued_by)) {
    if (text::trim(query_).empty()) fail(ErrorCode::InvalidValue, "empty search query");
    if (text::trim(issued_by_).empty()) fail(ErrorCode::InvalidValue, "search query without issuer");
}

std::string SearchQuery::normalized() const { return text::normalize_query(query_); }

void to_json(Json& j, const SearchQuery& q) {
    j = Json{{"query", q.query()}, {"purpose", to_string(q.purpose())}, {"issued_by", q.issued_by()}};
}

SearchQuery search_query_from_json(const Json& j) {
    auto p = parse_search_purpose(j.at("purpose").get<std::string>());
    if (!p) fail(ErrorCode::InvalidValue, "search purpose " + j.at("purpose").dump());
    return SearchQuery(j.at("query").get<std::string>(), *p, j.at("issued_by").get<std::string>());
}

// --- FixtureSearchProvider ----------------------------------------------------------

FixtureSearchProvider& FixtureSearchProvider::add(const std::string& query, std::vector<SearchHit> hits) {
    std::lock_guard lock(mutex_);
    if (query == "*") {
        fallback_ = std::move(hits);
    } else {
        exact_[text::normalize_query(query)] = std::move(hits);
    }
    return *this;
}

FixtureSearchProvider& FixtureSearchProvider::add_contains(const std::string& needle, std::vector<SearchHit> hits) {
    std::lock_guard lock(mutex_);
    contains_.emplace_back(text::normalize_query(needle), std::move(hits));
    return *this;
}

void FixtureSearchProvider::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open search fixtures " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(ErrorCode::InvalidValue, path + ":" + std::to_string(lineno) + ": malformed JSON");
        auto hits = hits_from_json(j.value("results", Json::array()));
        if (j.contains("contains")) {
            add_contains(j.at("contains").get<std::string>(), std::move(hits));
        } else {
            add(j.at("query").get<std::string>(), std::move(hits));
        }
    }
}

std::shared_ptr<FixtureSearchProvider> FixtureSearchProvider::from_file(const std::string& path) {
    auto p = std::make_shared<FixtureSearchProvider>();
    p->load(path);
    return p;
}

std::vector<SearchHit> FixtureSearchProvider::search(const std::string& normalized_query, int max_results) {
    std::lock_guard lock(mutex_);
    if (!available_) fail(ErrorCode::ProviderUnavailable, "fixture search provider marked unavailable");
    if (quota_ >= 0 && hits_ >= quota_) fail(ErrorCode::QuotaExceeded, "fixture search quota of " + std::to_string(quota_));
    ++hits_;
    const std::vector<SearchHit>* found = nullptr;
    if (auto it = exact_.find(normalized_query); it != exact_.end()) found = &it->second;
    if (!found) {
        for (const auto& [needle, hits] : contains_) {
            if (normalized_query.find(needle) != std::string::npos) {
                found = &hits;
                break;
            }
        }
    }
    if (!found && fallback_) found = &*fallback_;
    if (!found) return {};
    std::vector<SearchHit> out(found->begin(),
                               found->begin() + std::min<std::ptrdiff_t>(max_results, static_cast<std::ptrdiff_t>(found->size())));
    return out;
}

int FixtureSearchProvider::hit_count() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

// --- GoogleSearchProvider --------------------------------------------------------------

GoogleSearchProvider::GoogleSearchProvider(std::string api_key, std::string engine_id, Millis timeout)
    : api_key_(std::move(api_key)), engine_id_(std::move(engine_id)), timeout_(timeout) {}

std::shared_ptr<GoogleSearchProvider> GoogleSearchProvider::from_environment() {
    const char* key = std::getenv("U2F_SEARCH_KEY");
    const char* cx = std::getenv("U2F_SEARCH_CX");
    if (!key || !cx) fail(ErrorCode::ProviderUnavailable, "U2F_SEARCH_KEY / U2F_SEARCH_CX not set");
    return std::make_shared<GoogleSearchProvider>(key, cx);
}

std::vector<SearchHit> GoogleSearchProvider::search(const std::string& normalized_query, int max_results) {
    const std::string url = "https://www.googleapis.com/customsearch/v1?key=" + url_encode(api_key_) +
                            "&cx=" + url_encode(engine_id_) + "&q=" + url_encode(normalized_query) +
                            "&num=" + std::to_string(std::clamp(max_results, 1, 10));
    const auto r = http_request("GET", url, {}, {}, timeout_);
    if (r.status == 0) fail(ErrorCode::ProviderUnavailable, "search: " + r.transport_error);
    if (r.status == 429 || r.status == 403) fail(ErrorCode::QuotaExceeded, "search: HTTP " + std::to_string(r.status));
    if (r.status != 200) fail(ErrorCode::ProviderUnavailable, "search: HTTP " + std::to_string(r.status));
    const auto body = Json::parse(r.body, nullptr, false);
    std::vector<SearchHit> hits;
    if (body.is_discarded()) return hits;
    for (const auto& item : body.value("items", Json::array())) {
        const auto snippet = item.value("snippet", std::string{});
        if (text::trim(snippet).empty()) continue;
        hits.push_back({item.value("link", std::string{}), snippet, ""});
        if (static_cast<int>(hits.size()) >= max_results) break;
    }
    return hits;
}

// --- SearchAugmentor -----------------------------------------------------------------------

SearchAugmentor::SearchAugmentor(std::shared_ptr<SearchProvider> provider, int max_results,
                                 std::shared_ptr<RateLimiter> limiter)
    : provider_(std::move(provider)), max_results_(max_results), limiter_(std::move(limiter)) {
    if (!provider_) fail(ErrorCode::InvalidValue, "search augmentor needs a provider");
}

std::vector<EvidenceItem> SearchAugmentor::search(const SearchQuery& query, const SearchObserver& observer) {
    const auto key = query.normalized();
    std::vector<SearchHit> hits;
    bool cached = false;
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            hits = it->second;
            cached = true;
        }
    }
    if (!cached) {
        try {
            if (limiter_) limiter_->acquire();
            hits = provider_->search(key, max_results_);
        } catch (const Error& e) {
            if (observer) observer(query, nullptr, &e, false);
            throw;
        }
        if (static_cast<int>(hits.size()) > max_results_) hits.resize(static_cast<std::size_t>(max_results_));
        std::lock_guard lock(mutex_);
        cache_.emplace(key, hits);
    }
    std::vector<EvidenceItem> evidence;
    for (const auto& h : hits) {
        evidence.push_back({h.source, h.snippet, supported_component(query.purpose()), h.retrieved_at});
    }
    if (observer) observer(query, &evidence, nullptr, cached);
    return evidence;
}

ClaimCheck SearchAugmentor::verify_claim(const std::string& claim, Component component, const std::string& issuer,
                                         const Gateway& gateway, const SearchObserver& search_observer,
                                         const CallObserver& call_observer, int max_repairs,
                                         const std::string& constraints) {
    ClaimCheck out;
    SearchQuery q(claim + " " + component_name(component), validation_purpose(component), issuer);
    out.evidence = search(q, search_observer);
    if (out.evidence.empty()) {
        out.stance = Stance::NoEvidence;
        return out;
    }
    std::string snippets;
    for (std::size_t i = 0; i < out.evidence.size(); ++i) {
        snippets += "[" + std::to_string(i + 1) + "] " + out.evidence[i].snippet + " (" + out.evidence[i].source + ")\n";
    }
    const auto prompt = PromptLibrary::defaults().render(
        "search.stance", {{"claim", claim}, {"component_name", component_name(component)}, {"snippets", snippets}},
        constraints);
    ChatRequest req("search.stance", prompt.system, prompt.user, 0.2, 256);
    FieldSchema schema{{FieldSpec::enumeration("stance", {"Supports", "Contradicts"})}};
    const auto result = gateway.complete_structured(req, schema, max_repairs, call_observer);
    out.stance = result.record.at("stance").get<std::string>() == "Supports" ? Stance::Supports : Stance::Contradicts;
    return out;
}

} // namespace u2f
