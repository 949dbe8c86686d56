#include "u2f/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "u2f/http.hpp"
#include "u2f/text.hpp"

namespace u2f {

namespace {

constexpr std::array<std::pair<RaterKind, const char*>, 3> kRaterKinds{{
    {RaterKind::HumanExpert, "HumanExpert"},
    {RaterKind::HumanStudent, "HumanStudent"},
    {RaterKind::LLMJudge, "LLMJudge"},
}};

int likert(const Json& j, const char* field) {
    if (!j.contains(field)) fail(ErrorCode::MissingField, field);
    const auto& v = j.at(field);
    if (!v.is_number_integer()) fail(ErrorCode::InvalidValue, std::string(field) + " must be an integer");
    const int x = v.get<int>();
    if (x < 1 || x > 5) fail(ErrorCode::ScoreOutOfRange, std::string(field) + "=" + std::to_string(x));
    return x;
}

std::vector<double> normalised(std::vector<double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0 || !std::isfinite(n)) fail(ErrorCode::EmbedderFailure, "zero or non-finite embedding");
    for (double& x : v) x /= n;
    return v;
}

std::string fmt(double v, int precision = 2) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string fmt_ms(const MeanStd& m) { return m.n == 0 ? "n/a" : fmt(m.mean) + " ± " + fmt(m.std); }

std::string fmt_rate(const std::optional<double>& r) { return r ? fmt(*r * 100.0, 1) + "%" : "n/a"; }

std::string csv_opt(const std::optional<double>& r) { return r ? fmt(*r, 4) : ""; }

std::string csv_ms(const MeanStd& m) { return m.n == 0 ? "," : fmt(m.mean, 4) + "," + fmt(m.std, 4); }

} // namespace

std::string to_string(RaterKind k) {
    for (const auto& [v, n] : kRaterKinds) {
        if (v == k) return n;
    }
    return "?";
}

std::optional<RaterKind> parse_rater_kind(std::string_view s) {
    const auto l = text::to_lower(text::trim(s));
    for (const auto& [v, n] : kRaterKinds) {
        if (l == text::to_lower(n)) return v;
    }
    if (l == "expert") return RaterKind::HumanExpert;
    if (l == "student") return RaterKind::HumanStudent;
    if (l == "llm") return RaterKind::LLMJudge;
    return std::nullopt;
}

void to_json(Json& j, const RatingRecord& r) {
    Json approvals = Json::array();
    for (const auto& a : r.uu_approvals) {
        Json item{{"uu_id", a.uu_id}, {"approved", a.approved}};
        if (!a.note.empty()) item["note"] = a.note;
        approvals.push_back(item);
    }
    j = Json{{"case_id", r.case_id},         {"rater_id", r.rater_id},     {"rater_kind", to_string(r.rater_kind)},
             {"novelty", r.novelty},         {"feasibility", r.feasibility}, {"uu_approvals", approvals}};
    if (!r.run.empty()) j["run"] = r.run;
    if (r.coherence) j["coherence"] = *r.coherence;
    if (r.relevance) j["relevance"] = *r.relevance;
}

void from_json(const Json& j, RatingRecord& r) {
    for (const char* f : {"case_id", "rater_id", "rater_kind"}) {
        if (!j.contains(f)) fail(ErrorCode::MissingField, f);
    }
    r.case_id = j.at("case_id").get<std::string>();
    r.rater_id = j.at("rater_id").get<std::string>();
    const auto kind = parse_rater_kind(j.at("rater_kind").get<std::string>());
    if (!kind) fail(ErrorCode::InvalidValue, "unknown rater_kind " + j.at("rater_kind").dump());
    r.rater_kind = *kind;
    r.novelty = likert(j, "novelty");
    r.feasibility = likert(j, "feasibility");
    r.run = j.value("run", std::string{});
    r.uu_approvals.clear();
    for (const auto& a : j.value("uu_approvals", Json::array())) {
        r.uu_approvals.push_back({a.at("uu_id").get<std::string>(), a.at("approved").get<bool>(),
                                  a.value("note", std::string{})});
    }
    r.coherence = j.contains("coherence") ? std::optional<int>(likert(j, "coherence")) : std::nullopt;
    r.relevance = j.contains("relevance") ? std::optional<int>(likert(j, "relevance")) : std::nullopt;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<RatingRecord> read_ratings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open ratings file " + path);
    std::string line;
    if (!std::getline(in, line)) return {};
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[text::trim(header[i])] = i;
    for (const char* f : {"case_id", "rater_id", "rater_kind", "novelty", "feasibility"}) {
        if (!col.count(f)) fail(ErrorCode::MissingField, std::string("ratings header lacks ") + f);
    }

    std::vector<RatingRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        auto cell = [&](const std::string& name) -> std::string {
            auto it = col.find(name);
            if (it == col.end() || it->second >= cells.size()) return {};
            return text::trim(cells[it->second]);
        };
        Json j{{"case_id", cell("case_id")}, {"rater_id", cell("rater_id")}, {"rater_kind", cell("rater_kind")}};
        try {
            for (const char* f : {"novelty", "feasibility", "coherence", "relevance"}) {
                const auto v = cell(f);
                if (!v.empty()) j[f] = std::stoi(v);
            }
        } catch (const std::logic_error&) {
            fail(ErrorCode::InvalidValue, path + ":" + std::to_string(lineno) + ": non-integer score");
        }
        if (!cell("run").empty()) j["run"] = cell("run");
        Json approvals = Json::array();
        std::istringstream parts(cell("uu_approvals"));
        std::string part;
        while (std::getline(parts, part, ';')) {
            part = text::trim(part);
            if (part.empty()) continue;
            const auto colon = part.rfind(':');
            if (colon == std::string::npos) {
                fail(ErrorCode::InvalidValue, path + ":" + std::to_string(lineno) + ": bad approval '" + part + "'");
            }
            const auto flag = text::trim(part.substr(colon + 1));
            approvals.push_back({{"uu_id", text::trim(part.substr(0, colon))},
                                 {"approved", flag == "1" || text::to_lower(flag) == "true"}});
        }
        j["uu_approvals"] = approvals;
        out.push_back(j.get<RatingRecord>());
    }
    return out;
}

std::vector<RatingRecord> read_ratings_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open ratings file " + path);
    std::vector<RatingRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        out.push_back(Json::parse(line).get<RatingRecord>());
    }
    return out;
}

std::vector<RatingRecord> read_ratings(const std::string& path) {
    return path.ends_with(".csv") ? read_ratings_csv(path) : read_ratings_jsonl(path);
}

std::string run_label(const CaseResult& r) {
    auto label = to_string(r.mode);
    if (r.variant != "Full") label += "/" + r.variant;
    return label;
}

// --- embeddings ------------------------------------------------------------------------

std::vector<double> HashEmbedder::embed(const std::string& s) {
    text::SplitMix64 rng(text::fnv1a64(s));
    std::vector<double> v(static_cast<std::size_t>(dimension_));
    for (double& x : v) x = rng.uniform() * 2.0 - 1.0;
    return normalised(std::move(v));
}

TableEmbedder& TableEmbedder::set(const std::string& s, std::vector<double> v) {
    if (static_cast<int>(v.size()) != dimension_) fail(ErrorCode::InvalidValue, "vector has the wrong dimension");
    table_[s] = normalised(std::move(v));
    return *this;
}

std::vector<double> TableEmbedder::embed(const std::string& s) {
    auto it = table_.find(s);
    if (it == table_.end()) fail(ErrorCode::EmbedderFailure, "no vector for '" + s.substr(0, 40) + "'");
    return it->second;
}

std::vector<double> RemoteEmbedder::embed(const std::string& s) {
    const Json body{{"model", config_.model}, {"input", s}};
    const auto r = http_request("POST", config_.base_url + "/embeddings",
                                {{"Authorization", "Bearer " + config_.api_key}, {"Content-Type", "application/json"}},
                                body.dump(), config_.deadline);
    try {
        raise_for_http(r, "embeddings");
    } catch (const Error& e) {
        fail(ErrorCode::EmbedderFailure, e.what());
    }
    const auto j = Json::parse(r.body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || j.at("data").empty()) {
        fail(ErrorCode::EmbedderFailure, "unexpected embeddings response");
    }
    auto v = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dimension_) {
        fail(ErrorCode::EmbedderFailure, "expected dimension " + std::to_string(dimension_) + ", got " +
                                             std::to_string(v.size()));
    }
    return normalised(std::move(v));
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) fail(ErrorCode::EmbedderFailure, "embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) fail(ErrorCode::EmbedderFailure, "zero embedding");
    // Equal vectors are exactly 1, not 1 minus rounding noise.
    if (a == b) return 1.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double semantic_novelty(const std::string& result_text, const std::string& initial_text, EmbeddingProvider& embedder) {
    if (text::trim(result_text).empty() || text::trim(initial_text).empty()) {
        fail(ErrorCode::InvalidValue, "semantic novelty needs two non-empty texts");
    }
    return 1.0 - cosine(embedder.embed(result_text), embedder.embed(initial_text));
}

// --- statistics --------------------------------------------------------------------------

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail(ErrorCode::DegenerateInput, "samples differ in length");
    if (x.size() < 2) fail(ErrorCode::DegenerateInput, "need at least two observations");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::DegenerateInput, "zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail(ErrorCode::DegenerateInput, "samples differ in length");
    return pearson(average_ranks(x), average_ranks(y));
}

double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
    if (counts.empty() || counts.front().empty()) fail(ErrorCode::DegenerateInput, "empty rating matrix");
    const std::size_t k = counts.front().size();
    int n = -1;
    for (const auto& row : counts) {
        if (row.size() != k) fail(ErrorCode::InvalidValue, "rows have different category counts");
        int sum = 0;
        for (int c : row) {
            if (c < 0) fail(ErrorCode::InvalidValue, "negative count");
            sum += c;
        }
        if (n < 0) n = sum;
        if (sum != n) fail(ErrorCode::UnequalRaterCounts, "item rated by " + std::to_string(sum) + " raters, expected " +
                                                              std::to_string(n));
    }
    if (n < 2) fail(ErrorCode::DegenerateInput, "need at least two raters per item");

    const double N = static_cast<double>(counts.size());
    const double nn = n;
    double p_bar = 0.0;
    std::vector<double> p(k, 0.0);
    for (const auto& row : counts) {
        double sq = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            sq += static_cast<double>(row[j]) * row[j];
            p[j] += row[j];
        }
        p_bar += (sq - nn) / (nn * (nn - 1.0));
    }
    p_bar /= N;
    double pe = 0.0;
    for (double& pj : p) {
        pj /= N * nn;
        pe += pj * pj;
    }
    if (std::abs(1.0 - pe) < 1e-15) fail(ErrorCode::DegenerateInput, "chance agreement is 1 (one category used)");
    return (p_bar - pe) / (1.0 - pe);
}

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd m;
    m.n = static_cast<int>(xs.size());
    if (xs.empty()) return m;
    m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / xs.size());
    return m;
}

// --- report ---------------------------------------------------------------------------------

std::optional<double> approval_rate(const std::vector<RatingRecord>& ratings, const std::vector<RaterKind>& kinds) {
    int approved = 0, total = 0;
    for (const auto& r : ratings) {
        if (std::find(kinds.begin(), kinds.end(), r.rater_kind) == kinds.end()) continue;
        for (const auto& a : r.uu_approvals) {
            ++total;
            approved += a.approved;
        }
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(approved) / total;
}

ReportTable evaluate_run(const std::vector<CaseResult>& results, const std::vector<RatingRecord>& ratings,
                         EmbeddingProvider& embedder) {
    auto matches = [](const RatingRecord& r, const CaseResult& c) {
        return r.case_id == c.case_id && (r.run.empty() || r.run == run_label(c));
    };
    std::vector<std::string> missing;
    for (const auto& c : results) {
        const bool rated = std::any_of(ratings.begin(), ratings.end(), [&](const auto& r) { return matches(r, c); });
        if (!rated) missing.push_back(c.case_id + " (" + run_label(c) + ")");
    }
    if (!missing.empty()) fail(ErrorCode::MissingRatings, text::join(missing, ", "));

    // Rows in first-seen order of labels.
    std::vector<std::string> labels;
    for (const auto& c : results) {
        if (std::find(labels.begin(), labels.end(), run_label(c)) == labels.end()) labels.push_back(run_label(c));
    }

    ReportTable table;
    table.embedder = embedder.model_id();
    for (const auto& label : labels) {
        ReportRow row;
        row.label = label;
        std::vector<double> hn, ln, hf, lf, sem, uus;
        std::vector<RatingRecord> row_ratings;
        for (const auto& c : results) {
            if (run_label(c) != label) continue;
            ++row.cases;
            const auto produced = solution_text(c);
            sem.push_back(produced.empty() || c.initial_solution.empty()
                              ? 0.0
                              : semantic_novelty(produced, c.initial_solution, embedder));
            uus.push_back(static_cast<double>(c.uus.size()));
            for (const auto& r : ratings) {
                if (!matches(r, c)) continue;
                row_ratings.push_back(r);
                const bool llm = r.rater_kind == RaterKind::LLMJudge;
                (llm ? ln : hn).push_back(r.novelty);
                (llm ? lf : hf).push_back(r.feasibility);
            }
        }
        row.human_novelty = mean_std(hn);
        row.llm_novelty = mean_std(ln);
        row.human_feasibility = mean_std(hf);
        row.llm_feasibility = mean_std(lf);
        row.semantic_novelty = mean_std(sem).mean;
        row.uus_per_case = mean_std(uus).mean;
        row.expert_approval = approval_rate(row_ratings, {RaterKind::HumanExpert});
        row.human_approval = approval_rate(row_ratings, {RaterKind::HumanExpert, RaterKind::HumanStudent});
        row.llm_approval = approval_rate(row_ratings, {RaterKind::LLMJudge});
        table.rows.push_back(row);
    }
    return table;
}

std::string to_csv(const ReportTable& t) {
    std::ostringstream os;
    os << "method,cases,human_novelty_mean,human_novelty_std,llm_novelty_mean,llm_novelty_std,"
          "human_feasibility_mean,human_feasibility_std,llm_feasibility_mean,llm_feasibility_std,"
          "semantic_novelty,uus_per_case,expert_approval,human_approval,llm_approval\n";
    for (const auto& r : t.rows) {
        os << r.label << "," << r.cases << "," << csv_ms(r.human_novelty) << "," << csv_ms(r.llm_novelty) << ","
           << csv_ms(r.human_feasibility) << "," << csv_ms(r.llm_feasibility) << "," << fmt(r.semantic_novelty, 4)
           << "," << fmt(r.uus_per_case, 4) << "," << csv_opt(r.expert_approval) << "," << csv_opt(r.human_approval)
           << "," << csv_opt(r.llm_approval) << "\n";
    }
    return os.str();
}

std::string to_markdown(const ReportTable& t) {
    std::ostringstream os;
    os << "| Method | Cases | Novelty (human) | Novelty (LLM) | Feasibility (human) | Feasibility (LLM) | "
          "Semantic novelty | UUs/case | Expert approval | Human approval | LLM approval |\n"
       << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : t.rows) {
        os << "| " << r.label << " | " << r.cases << " | " << fmt_ms(r.human_novelty) << " | " << fmt_ms(r.llm_novelty)
           << " | " << fmt_ms(r.human_feasibility) << " | " << fmt_ms(r.llm_feasibility) << " | "
           << fmt(r.semantic_novelty) << " | " << fmt(r.uus_per_case) << " | " << fmt_rate(r.expert_approval) << " | "
           << fmt_rate(r.human_approval) << " | " << fmt_rate(r.llm_approval) << " |\n";
    }
    os << "\nSemantic novelty embedder: " << t.embedder << "\n";
    return os.str();
}

} // namespace u2f
