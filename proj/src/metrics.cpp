#include "recmeta/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "recmeta/algorithms.hpp"

namespace recmeta {

namespace {

bool is_relevant(std::span<const ItemIndex> relevant, ItemIndex item) {
    return std::binary_search(relevant.begin(), relevant.end(), item);
}

void check_relevant(std::span<const ItemIndex> relevant) {
    if (relevant.empty()) throw EmptyRelevantSetError("metric needs a non-empty relevant set");
}

}  // namespace

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::NDCG: return "NDCG";
        case Metric::Recall: return "Recall";
        case Metric::HitRate: return "HitRate";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    for (Metric m : kAllMetrics)
        if (name == metric_name(m)) return m;
    throw SchemaMismatchError("unknown metric: " + name);
}

double ndcg_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, int k) {
    check_relevant(relevant);
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    double dcg = 0.0;
    for (std::size_t pos = 0; pos < depth; ++pos)
        if (is_relevant(relevant, ranked[pos])) dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    const std::size_t ideal = std::min<std::size_t>(k, relevant.size());
    double idcg = 0.0;
    for (std::size_t pos = 0; pos < ideal; ++pos) idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    return dcg / idcg;
}

double recall_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, int k) {
    check_relevant(relevant);
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    std::size_t hits = 0;
    for (std::size_t pos = 0; pos < depth; ++pos)
        if (is_relevant(relevant, ranked[pos])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double hitrate_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, int k) {
    check_relevant(relevant);
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    for (std::size_t pos = 0; pos < depth; ++pos)
        if (is_relevant(relevant, ranked[pos])) return 1.0;
    return 0.0;
}

std::vector<MetricResult> evaluate_fold(const FittedModel& model, const FoldSplit& split,
                                        std::span<const int> thresholds) {
    // per-user adjacency of both sides, from the sorted interaction lists
    std::vector<std::vector<ItemIndex>> train_items(model.n_users());
    std::vector<std::vector<ItemIndex>> test_items(model.n_users());
    for (const auto& [u, i] : split.train) train_items[u].push_back(i);
    for (const auto& [u, i] : split.test) test_items[u].push_back(i);

    const int max_k = *std::max_element(thresholds.begin(), thresholds.end());

    std::vector<double> sums(kAllMetrics.size() * thresholds.size(), 0.0);
    std::size_t evaluated_users = 0;
    for (UserIndex u = 0; u < model.n_users(); ++u) {
        if (test_items[u].empty()) continue;
        TopKRecommendations recs = recommend(model, u, max_k, train_items[u]);
        ++evaluated_users;
        std::size_t slot = 0;
        for (Metric m : kAllMetrics) {
            for (int k : thresholds) {
                double value = 0.0;
                switch (m) {
                    case Metric::NDCG: value = ndcg_at_k(recs.ranked_items, test_items[u], k); break;
                    case Metric::Recall: value = recall_at_k(recs.ranked_items, test_items[u], k); break;
                    case Metric::HitRate: value = hitrate_at_k(recs.ranked_items, test_items[u], k); break;
                }
                sums[slot++] += value;
            }
        }
    }

    std::vector<MetricResult> results;
    results.reserve(sums.size());
    std::size_t slot = 0;
    for (Metric m : kAllMetrics)
        for (int k : thresholds) {
            double mean = evaluated_users > 0 ? sums[slot] / static_cast<double>(evaluated_users) : 0.0;
            results.push_back(MetricResult{m, k, mean});
            ++slot;
        }
    return results;
}

}  // namespace recmeta
