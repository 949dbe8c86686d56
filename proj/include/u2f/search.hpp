#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "u2f/domain.hpp"
#include "u2f/gateway.hpp"

namespace u2f {

enum class SearchPurpose { ProbeWeakness, GroundAnalogy, ValidateF, ValidateI, ValidateC, RefactorSupport };

std::string to_string(SearchPurpose p);
std::optional<SearchPurpose> parse_search_purpose(std::string_view s);
SearchPurpose validation_purpose(Component c);

/// An explicit agent request for external evidence. Purpose and issuer are
/// mandatory: there is no way to search without saying who asked and why.
class SearchQuery {
public:
    SearchQuery(std::string query, SearchPurpose purpose, std::string issued_by);

    [[nodiscard]] const std::string& query() const { return query_; }
    [[nodiscard]] SearchPurpose purpose() const { return purpose_; }
    [[nodiscard]] const std::string& issued_by() const { return issued_by_; }
    /// Lowercased, whitespace-collapsed query text; the cache key.
    [[nodiscard]] std::string normalized() const;

private:
    std::string query_;
    SearchPurpose purpose_;
    std::string issued_by_;
};

void to_json(Json& j, const SearchQuery& q);
SearchQuery search_query_from_json(const Json& j);

/// Raw hit returned by a provider, before the augmentor tags it.
struct SearchHit {
    std::string source;
    std::string snippet;
    std::string retrieved_at;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    /// Throws ProviderUnavailable or QuotaExceeded.
    virtual std::vector<SearchHit> search(const std::string& normalized_query, int max_results) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

/// File-backed provider. Format (JSON-Lines):
///
///     {"query": "exact query text", "results": [{"source_url_or_id": "...", "snippet": "...", "retrieved_at": "..."}]}
///     {"contains": "shutter", "results": [...]}
///     {"query": "*", "results": [...]}
///
/// Lookup is exact normalized query, then first `contains` rule, then "*";
/// otherwise no results.
class FixtureSearchProvider final : public SearchProvider {
public:
    FixtureSearchProvider() = default;

    FixtureSearchProvider& add(const std::string& query, std::vector<SearchHit> hits);
    FixtureSearchProvider& add_contains(const std::string& needle, std::vector<SearchHit> hits);
    void load(const std::string& path);
    static std::shared_ptr<FixtureSearchProvider> from_file(const std::string& path);

    void set_available(bool available) { available_ = available; }
    /// Provider calls allowed before QuotaExceeded; negative means unlimited.
    void set_quota(int quota) { quota_ = quota; }

    std::vector<SearchHit> search(const std::string& normalized_query, int max_results) override;
    [[nodiscard]] std::string id() const override { return "fixture"; }
    [[nodiscard]] int hit_count() const;

private:
    std::map<std::string, std::vector<SearchHit>> exact_;
    std::vector<std::pair<std::string, std::vector<SearchHit>>> contains_;
    std::optional<std::vector<SearchHit>> fallback_;
    bool available_ = true;
    int quota_ = -1;
    int hits_ = 0;
    mutable std::mutex mutex_;
};

/// Google Custom Search JSON API; key and engine id from U2F_SEARCH_KEY and
/// U2F_SEARCH_CX.
class GoogleSearchProvider final : public SearchProvider {
public:
    GoogleSearchProvider(std::string api_key, std::string engine_id, Millis timeout = Millis(15000));
    static std::shared_ptr<GoogleSearchProvider> from_environment();

    std::vector<SearchHit> search(const std::string& normalized_query, int max_results) override;
    [[nodiscard]] std::string id() const override { return "google-cse"; }

private:
    std::string api_key_;
    std::string engine_id_;
    Millis timeout_;
};

/// Observer for every search issued through the augmentor.
using SearchObserver = std::function<void(const SearchQuery&, const std::vector<EvidenceItem>* results,
                                          const Error* error, bool cached)>;

enum class Stance { Supports, Contradicts, NoEvidence };
std::string to_string(Stance s);

struct ClaimCheck {
    std::vector<EvidenceItem> evidence;
    Stance stance = Stance::NoEvidence;
};

/// On-demand external search with a per-run content-addressed cache and a
/// global rate limiter. Only ever invoked with an explicit SearchQuery.
class SearchAugmentor {
public:
    SearchAugmentor(std::shared_ptr<SearchProvider> provider, int max_results = 5,
                    std::shared_ptr<RateLimiter> limiter = nullptr);

    std::vector<EvidenceItem> search(const SearchQuery& query, const SearchObserver& observer = {});

    /// Searches for evidence on one validation component and classifies the
    /// snippets' stance with a gateway call. NoEvidence iff nothing was found.
    /// `constraints` is the caller's rendered human-constraints block.
    ClaimCheck verify_claim(const std::string& claim, Component component, const std::string& issuer,
                            const Gateway& gateway, const SearchObserver& search_observer = {},
                            const CallObserver& call_observer = {}, int max_repairs = 1,
                            const std::string& constraints = {});

    [[nodiscard]] const SearchProvider& provider() const { return *provider_; }

private:
    std::shared_ptr<SearchProvider> provider_;
    int max_results_;
    std::shared_ptr<RateLimiter> limiter_;
    std::map<std::string, std::vector<SearchHit>> cache_;
    std::mutex mutex_;
};

} // namespace u2f
