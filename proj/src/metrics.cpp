#include "mmei/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "mmei/error.hpp"

namespace mmei {

ConfusionCounts ConfusionCounts::tally(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                       std::size_t classes) {
    if (predictions.size() != labels.size()) {
        throw InputError("classification_metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw InputError("classification_metrics: no predictions");
    ConfusionCounts c;
    c.true_positive.assign(classes, 0);
    c.false_positive.assign(classes, 0);
    c.false_negative.assign(classes, 0);
    c.total = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] >= classes || labels[i] >= classes) throw IndexError("classification_metrics: class index out of range");
        if (predictions[i] == labels[i]) {
            ++c.true_positive[labels[i]];
        } else {
            ++c.false_positive[predictions[i]];
            ++c.false_negative[labels[i]];
        }
    }
    return c;
}

ClassificationScores classification_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                            std::size_t classes) {
    const ConfusionCounts c = ConfusionCounts::tally(predictions, labels, classes);
    auto ratio = [](std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); };
    ClassificationScores s;
    std::size_t correct = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        const double p = ratio(c.true_positive[k], c.true_positive[k] + c.false_positive[k]);
        const double r = ratio(c.true_positive[k], c.true_positive[k] + c.false_negative[k]);
        s.precision_macro += p;
        s.recall_macro += r;
        s.f1_macro += (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
        correct += c.true_positive[k];
    }
    s.accuracy = ratio(correct, c.total);
    s.precision_macro /= static_cast<double>(classes);
    s.recall_macro /= static_cast<double>(classes);
    s.f1_macro /= static_cast<double>(classes);
    return s;
}

void RankingJudgment::validate() const {
    std::set<std::string> seen(ranked.begin(), ranked.end());
    if (seen.size() != ranked.size()) throw InputError("ranking judgment has duplicate ids");
}

double average_precision(const RankingJudgment& j) {
    if (j.relevant.empty()) return 0.0;
    double acc = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < j.ranked.size(); ++i) {
        if (j.relevant.count(j.ranked[i])) {
            ++hits;
            acc += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return acc / static_cast<double>(j.relevant.size());
}

double mean_average_precision(std::span<const RankingJudgment> js) {
    if (js.empty()) return 0.0;
    double s = 0.0;
    for (const auto& j : js) s += average_precision(j);
    return s / static_cast<double>(js.size());
}

double ndcg_at_k(const RankingJudgment& j, std::size_t k) {
    if (k < 1) throw ParameterError("ndcg_at_k: k must be >= 1");
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, j.ranked.size()); ++i) {
        if (j.relevant.count(j.ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(k, j.relevant.size()); ++i) ideal += 1.0 / std::log2(static_cast<double>(i + 2));
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

double mean_ndcg_at_k(std::span<const RankingJudgment> js, std::size_t k) {
    if (js.empty()) return 0.0;
    double s = 0.0;
    for (const auto& j : js) s += ndcg_at_k(j, k);
    return s / static_cast<double>(js.size());
}

double hit_ratio_at_k(std::span<const RankingJudgment> js, std::size_t k) {
    if (k < 1) throw ParameterError("hit_ratio_at_k: k must be >= 1");
    if (js.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& j : js) {
        for (std::size_t i = 0; i < std::min(k, j.ranked.size()); ++i) {
            if (j.relevant.count(j.ranked[i])) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(js.size());
}

std::string MetricReport::to_json(int indent) const {
    nlohmann::ordered_json o;
    auto head = [&](const char* prefix, const ClassificationScores& s) {
        const std::string p(prefix);
        o[p + "_accuracy"] = s.accuracy;
        o[p + "_precision_macro"] = s.precision_macro;
        o[p + "_recall_macro"] = s.recall_macro;
        o[p + "_f1_macro"] = s.f1_macro;
    };
    // Unprefixed keys are the macro mean of the two heads.
    o["accuracy"] = (emotion.accuracy + intent.accuracy) / 2;
    o["precision_macro"] = (emotion.precision_macro + intent.precision_macro) / 2;
    o["recall_macro"] = (emotion.recall_macro + intent.recall_macro) / 2;
    o["f1_macro"] = (emotion.f1_macro + intent.f1_macro) / 2;
    head("emotion", emotion);
    head("intent", intent);
    o["map"] = map;
    o["ndcg_at_" + std::to_string(k)] = ndcg;
    o["hr_at_" + std::to_string(k)] = hit_ratio;
    o["k_ndcg"] = k;
    o["k_hr"] = k;
    o["samples"] = samples;
    o["ranked_users"] = ranked_users;
    return o.dump(indent) + "\n";
}

}  // namespace mmei
