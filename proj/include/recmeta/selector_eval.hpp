#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "recmeta/meta_dataset.hpp"
#include "recmeta/regressors.hpp"

namespace recmeta {

enum class Objective { PerformancePrediction, RankingPrediction };

const char* objective_name(Objective o);  // "performance" / "ranking"
Objective objective_from_name(const std::string& name);

// Rank correlation treats the two directions explicitly: a Ranking vector
// (1 = best) is ranked ascending, a Scores vector (higher = better) is ranked
// descending, so agreeing orderings always correlate positively.
enum class VectorKind { Ranking, Scores };

struct SpearmanResult {
    double rho = 0.0;
    double p = 1.0;
};

// Average-rank Spearman with a t-distribution p-value (n-2 dof). Constant
// vectors yield rho = 0, p = 1. Identical orderings yield exactly +/-1.
SpearmanResult spearman(std::span<const double> a, VectorKind kind_a, std::span<const double> b,
                        VectorKind kind_b);
SpearmanResult spearman(std::span<const double> a, std::span<const double> b);

// |top-n(predicted) ∩ top-n(true)| / n over rank vectors (1 = best).
double selection_recall(std::span<const int> predicted_ranking, std::span<const int> true_ranking,
                        int n);

// PerformancePrediction: labels are the ground-truth mean metric values.
// RankingPrediction: labels are the true ranks (1 = best).
std::vector<std::vector<double>> make_labels(const GroundTruth& gt, Objective objective);

// Predicted values -> rank vector (1 = best): descending for performance
// predictions, ascending for rank predictions, ties by combo id.
std::vector<int> rank_by_objective(std::span<const double> values, Objective objective);

struct LooRecord {
    std::string dataset;
    RegressorFamily learner;
    Objective objective;
    std::vector<double> predicted_values;  // per combo
    std::vector<int> predicted_ranking;    // per combo, 1 = best
    std::vector<int> true_ranking;         // per combo, 1 = best
    double rho = 0.0;
    double p = 1.0;
    double recall1 = 0.0;
    double recall3 = 0.0;
};

struct RecallLevel {
    double value = 0.0;
    int count = 0;
};

struct AggregateRow {
    RegressorFamily learner;
    Objective objective;
    double median_rho = 0.0;  // lower median for even counts
    double mean_recall1 = 0.0;
    double mean_recall3 = 0.0;
    double rho_delta_vs_performance = 0.0;
    std::vector<RecallLevel> recall1_distribution;
    std::vector<RecallLevel> recall3_distribution;
};

struct LooReport {
    std::vector<ComboSpec> combos;
    std::vector<LooRecord> records;
    std::vector<AggregateRow> aggregates;
};

struct LooOptions {
    int inner_folds = 3;
    std::uint64_t seed = 0;
    int jobs = 1;
    Metric metric = Metric::NDCG;
    int metric_k = 10;
};

// Leave-one-out study for one learner family and objective: per held-out
// dataset, grid-search + fit one regressor per combo on the rest, then score
// the predicted ranking against the ground truth.
std::vector<LooRecord> loo_evaluate(const PerformanceTable& table, RegressorFamily family,
                                    const std::vector<RegressorSpec>& grid, Objective objective,
                                    const LooOptions& options);

LooReport aggregate(const std::vector<ComboSpec>& combos, std::vector<LooRecord> records);

enum class ReportFormat { Csv, Json };

// CSV: records.csv, aggregates.csv, recall_distributions.csv.
// JSON: report.json with the same content.
void emit_report(const LooReport& report, const std::filesystem::path& dir, ReportFormat format);

}  // namespace recmeta
