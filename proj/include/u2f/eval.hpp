#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "u2f/gateway.hpp"
#include "u2f/orchestrator.hpp"

namespace u2f {

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------

enum class RaterKind { HumanExpert, HumanStudent, LLMJudge };
std::string to_string(RaterKind k);
std::optional<RaterKind> parse_rater_kind(std::string_view s);

struct UUApproval {
    std::string uu_id;
    bool approved = false;
    std::string note;
    bool operator==(const UUApproval&) const = default;
};

struct RatingRecord {
    std::string case_id;
    /// Restricts the rating to one run label (see run_label); empty matches
    /// every run of the case.
    std::string run;
    std::string rater_id;
    RaterKind rater_kind = RaterKind::HumanExpert;
    int novelty = 1;
    int feasibility = 1;
    std::vector<UUApproval> uu_approvals;
    /// Robustness-tier ratings (1-5), when collected.
    std::optional<int> coherence;
    std::optional<int> relevance;

    bool operator==(const RatingRecord&) const = default;
};

void to_json(Json& j, const RatingRecord& r);
/// Validates score ranges; throws ScoreOutOfRange / MissingField.
void from_json(const Json& j, RatingRecord& r);

/// CSV header:
///
///     case_id,rater_id,rater_kind,novelty,feasibility,uu_approvals[,run,coherence,relevance]
///
/// uu_approvals is `UU-1:1;UU-2:0` (1 approved, 0 rejected).
std::vector<RatingRecord> read_ratings_csv(const std::string& path);
std::vector<RatingRecord> read_ratings_jsonl(const std::string& path);
/// Picks the reader by extension (.csv, otherwise JSON-Lines).
std::vector<RatingRecord> read_ratings(const std::string& path);

/// "U2F", "ZeroShot", ... with "/<variant>" appended for ablation variants.
std::string run_label(const CaseResult& r);

// ---------------------------------------------------------------------------
// Embeddings and metrics
// ---------------------------------------------------------------------------

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// Unit-norm vector of dimension(); throws EmbedderFailure.
    virtual std::vector<double> embed(const std::string& text) = 0;
    [[nodiscard]] virtual std::string model_id() const = 0;
    [[nodiscard]] virtual int dimension() const = 0;
};

/// Deterministic stand-in: a pseudo-random unit vector seeded by the text's
/// hash, stable across runs and platforms.
class HashEmbedder final : public EmbeddingProvider {
public:
    explicit HashEmbedder(int dimension = 64) : dimension_(dimension) {}
    std::vector<double> embed(const std::string& text) override;
    [[nodiscard]] std::string model_id() const override { return "hash-" + std::to_string(dimension_); }
    [[nodiscard]] int dimension() const override { return dimension_; }

private:
    int dimension_;
};

/// Fixed text -> vector table (vectors are normalised on insert).
class TableEmbedder final : public EmbeddingProvider {
public:
    explicit TableEmbedder(int dimension) : dimension_(dimension) {}
    TableEmbedder& set(const std::string& text, std::vector<double> v);
    std::vector<double> embed(const std::string& text) override;
    [[nodiscard]] std::string model_id() const override { return "table"; }
    [[nodiscard]] int dimension() const override { return dimension_; }

private:
    int dimension_;
    std::map<std::string, std::vector<double>> table_;
};

/// OpenAI-compatible `/embeddings` endpoint. The reference model is
/// all-MiniLM-L6-v2 served behind such an endpoint.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(ProviderConfig config, int dimension) : config_(std::move(config)), dimension_(dimension) {}
    std::vector<double> embed(const std::string& text) override;
    [[nodiscard]] std::string model_id() const override { return config_.model; }
    [[nodiscard]] int dimension() const override { return dimension_; }

private:
    ProviderConfig config_;
    int dimension_;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// 1 - cos(embed(result), embed(initial)), in [0, 2].
double semantic_novelty(const std::string& result_text, const std::string& initial_text, EmbeddingProvider& embedder);

/// Throws DegenerateInput for length < 2, mismatched lengths or zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Pearson over average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& x);

/// Items x categories matrix of rater counts. Throws UnequalRaterCounts when
/// rows sum differently and DegenerateInput when chance agreement is 1.
double fleiss_kappa(const std::vector<std::vector<int>>& counts);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation
    int n = 0;
};
MeanStd mean_std(const std::vector<double>& xs);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string label;
    int cases = 0;
    MeanStd human_novelty;
    MeanStd llm_novelty;
    MeanStd human_feasibility;
    MeanStd llm_feasibility;
    double semantic_novelty = 0.0;
    double uus_per_case = 0.0;
    /// Experts only.
    std::optional<double> expert_approval;
    /// Experts and students.
    std::optional<double> human_approval;
    std::optional<double> llm_approval;
};

struct ReportTable {
    std::string embedder;
    std::vector<ReportRow> rows;
};

/// Per-run-label aggregates. Throws MissingRatings naming every result
/// without a rating.
ReportTable evaluate_run(const std::vector<CaseResult>& results, const std::vector<RatingRecord>& ratings,
                         EmbeddingProvider& embedder);

/// approved / total over the given approvals; nullopt when there are none.
std::optional<double> approval_rate(const std::vector<RatingRecord>& ratings, const std::vector<RaterKind>& kinds);

std::string to_csv(const ReportTable& t);
std::string to_markdown(const ReportTable& t);

/// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

} // namespace u2f
