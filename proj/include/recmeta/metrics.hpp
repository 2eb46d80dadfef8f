#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "recmeta/interactions.hpp"
#include "recmeta/preprocess.hpp"

namespace recmeta {

enum class Metric { NDCG, Recall, HitRate };

constexpr std::array<Metric, 3> kAllMetrics{Metric::NDCG, Metric::Recall, Metric::HitRate};
constexpr std::array<int, 5> kThresholds{1, 3, 5, 10, 20};

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

struct MetricResult {
    Metric metric;
    int k;
    double value;
};

// Binary-relevance top-k metrics. `ranked` holds distinct item indices in
// recommendation order; `relevant` is a sorted list of the user's test items.
// All throw EmptyRelevantSetError when `relevant` is empty.
double ndcg_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, int k);
double recall_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, int k);
double hitrate_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, int k);

class FittedModel;

// Mean metric values over all users with at least one test interaction.
// Users absent from the test side are skipped. Results are ordered by
// (metric, threshold) with metrics in kAllMetrics order.
std::vector<MetricResult> evaluate_fold(const FittedModel& model, const FoldSplit& split,
                                        std::span<const int> thresholds = kThresholds);

}  // namespace recmeta
