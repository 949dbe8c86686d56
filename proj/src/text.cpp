#include "u2f/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace u2f::text {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

const std::set<std::string>& function_words() {
    static const std::set<std::string> kWords = {
        "the",  "and",   "for",  "with", "that", "this", "from", "into", "are",  "was",
        "were", "been",  "has",  "have", "had",  "not",  "but",  "its",  "our",  "their",
        "via",  "any",   "all",  "can",  "will", "should", "would", "could", "may", "must",
        "than", "then",  "when", "which", "while", "about", "over", "under", "also", "such",
        "each", "other", "more", "most", "some", "only", "very", "them", "they", "there",
        "these", "those", "what", "who", "how", "why", "where", "use", "using", "used"};
    return kWords;
}

} // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::set<std::string> word_set(std::string_view s) {
    auto w = words(s);
    return {w.begin(), w.end()};
}

std::size_t word_count(std::string_view s) { return words(s).size(); }

double jaccard(std::string_view a, std::string_view b) {
    const auto sa = word_set(a);
    const auto sb = word_set(b);
    if (sa.empty() && sb.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& w : sa) inter += sb.count(w);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string canonical_words(std::string_view s) { return join(words(s), " "); }

std::string normalize_query(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::set<std::string> content_words(std::string_view s) {
    std::set<std::string> out;
    for (auto& w : words(s)) {
        if (w.size() >= 3 && !function_words().count(w)) out.insert(std::move(w));
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<SentenceUnit> split_sentences(std::string_view s) {
    std::vector<SentenceUnit> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if ((c == '.' || c == '!' || c == '?') && i + 1 < s.size() && is_space(s[i + 1])) {
            std::size_t j = i + 1;
            while (j < s.size() && is_space(s[j])) ++j;
            out.push_back({std::string(s.substr(start, i + 1 - start)), std::string(s.substr(i + 1, j - i - 1))});
            start = j;
            i = j;
            continue;
        }
        ++i;
    }
    if (start < s.size()) {
        // A trailing whitespace-only remainder is glued to the previous unit.
        std::string rest(s.substr(start));
        if (trim(rest).empty() && !out.empty()) {
            out.back().trailing += rest;
        } else {
            std::size_t e = rest.size();
            while (e > 0 && is_space(rest[e - 1])) --e;
            out.push_back({rest.substr(0, e), rest.substr(e)});
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t SplitMix64::below(std::uint64_t bound) {
    if (bound == 0) return 0;
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
}

} // namespace u2f::text
