#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

namespace mmei {

struct ConfusionCounts {
    std::vector<std::size_t> true_positive;
    std::vector<std::size_t> false_positive;
    std::vector<std::size_t> false_negative;
    std::size_t total = 0;

    static ConfusionCounts tally(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t classes);
};

struct ClassificationScores {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
};

/// Macro-averaged over all `classes`; 0/0 counts as 0.
ClassificationScores classification_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                            std::size_t classes);

struct RankingJudgment {
    std::vector<std::string> ranked;
    std::set<std::string> relevant;

    void validate() const;
};

/// Mean of precision@rank over every relevant item; unretrieved ones count 0.
double average_precision(const RankingJudgment& j);
double mean_average_precision(std::span<const RankingJudgment> js);

/// Binary-relevance NDCG with log2 discounts, normalized by the ideal DCG@k.
double ndcg_at_k(const RankingJudgment& j, std::size_t k);
double mean_ndcg_at_k(std::span<const RankingJudgment> js, std::size_t k);

/// Fraction of judgments with a relevant id among the first k.
double hit_ratio_at_k(std::span<const RankingJudgment> js, std::size_t k);

/// Evaluation summary; serialized with fixed key names.
struct MetricReport {
    ClassificationScores emotion;
    ClassificationScores intent;
    double map = 0.0;
    double ndcg = 0.0;
    double hit_ratio = 0.0;
    std::size_t k = 10;
    std::size_t samples = 0;
    std::size_t ranked_users = 0;

    /// indent < 0 gives a single line.
    std::string to_json(int indent = 2) const;
};

}  // namespace mmei
