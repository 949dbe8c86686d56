#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

/// Small, deterministic text utilities shared by the filter, the agents'
/// sanity checks, degradation and the mock backends.
namespace u2f::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercase alphanumeric tokens in order of appearance.
std::vector<std::string> words(std::string_view s);
std::set<std::string> word_set(std::string_view s);
std::size_t word_count(std::string_view s);

/// |A ∩ B| / |A ∪ B| over lowercase word sets; 0 when both are empty.
double jaccard(std::string_view a, std::string_view b);

/// Tokens joined by single spaces: "Foo,  bar!" -> "foo bar".
std::string canonical_words(std::string_view s);

/// Lowercase and collapse whitespace runs to one space, trimmed.
std::string normalize_query(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

/// Words of length >= 3 that are not common English function words.
std::set<std::string> content_words(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

/// A sentence plus the whitespace that followed it in the source text.
struct SentenceUnit {
    std::string body;
    std::string trailing;
};

/// Splits on terminal punctuation (. ! ?) followed by whitespace.
/// Concatenating body+trailing over all units reproduces the input exactly.
std::vector<SentenceUnit> split_sentences(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// SplitMix64; used wherever a portable seeded stream is needed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t state_;
};

} // namespace u2f::text
