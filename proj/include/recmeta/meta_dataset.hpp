#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "recmeta/algorithms.hpp"
#include "recmeta/interactions.hpp"
#include "recmeta/meta_features.hpp"
#include "recmeta/metrics.hpp"

namespace recmeta {

struct NamedDataset {
    std::string name;
    InteractionDataset dataset;
};

// Ground-truth performance grid: every (dataset, combo, metric, threshold,
// fold) cell is present, plus per-dataset meta-features and the build
// fingerprint.
class PerformanceTable {
public:
    PerformanceTable() = default;
    PerformanceTable(std::vector<std::string> datasets, std::vector<ComboSpec> combos,
                     std::uint64_t seed, double budget_seconds);

    const std::vector<std::string>& datasets() const { return datasets_; }
    const std::vector<ComboSpec>& combos() const { return combos_; }
    std::uint64_t seed() const { return seed_; }
    double budget_seconds() const { return budget_seconds_; }

    std::size_t n_folds() const { return 5; }

    double score(std::size_t d, std::size_t c, Metric m, int k, int fold) const {
        return scores_[index(d, c, m, k, fold)];
    }
    void set_score(std::size_t d, std::size_t c, Metric m, int k, int fold, double v) {
        scores_[index(d, c, m, k, fold)] = v;
    }

    const MetaFeatureVector& meta_features(std::size_t d) const { return meta_features_[d]; }
    void set_meta_features(std::size_t d, const MetaFeatureVector& mf) { meta_features_[d] = mf; }

    const std::vector<std::string>& excluded_datasets() const { return excluded_; }
    void set_excluded_datasets(std::vector<std::string> names) { excluded_ = std::move(names); }

    std::size_t dataset_index(const std::string& name) const;

private:
    std::size_t index(std::size_t d, std::size_t c, Metric m, int k, int fold) const;

    std::vector<std::string> datasets_;
    std::vector<ComboSpec> combos_;
    std::vector<double> scores_;
    std::vector<MetaFeatureVector> meta_features_;
    std::vector<std::string> excluded_;
    std::uint64_t seed_ = 0;
    double budget_seconds_ = 0;
};

// Per-dataset labels (mean NDCG@10 over folds by default) and the derived
// true ranking, rank 1 = best, exact ties broken by ascending combo id.
struct GroundTruth {
    std::vector<std::string> datasets;
    std::vector<ComboSpec> combos;
    std::vector<std::vector<double>> labels;  // [dataset][combo]
    std::vector<std::vector<int>> ranking;    // [dataset][combo], 1-based
};

struct BuildOptions {
    double budget_seconds = 60.0;
    std::uint64_t seed = 0;
    int jobs = 1;
    int core_k = 5;
    std::size_t min_pruned_interactions = 50;
};

// Runs prune -> cv plan -> fit -> evaluate for every (dataset, combo, fold)
// and fills the complete grid. Datasets that prune below the minimum size are
// excluded with a record, not fatal. Output is independent of `jobs`.
PerformanceTable build_performance_table(const std::vector<NamedDataset>& corpus,
                                         const std::vector<ComboSpec>& zoo,
                                         const BuildOptions& options);

GroundTruth ground_truth(const PerformanceTable& table, Metric metric = Metric::NDCG, int k = 10);

// Directory layout: performance.csv, meta_features.csv, manifest.json.
// save -> load -> save is byte-identical; load validates the grid.
void save_table(const PerformanceTable& table, const std::filesystem::path& dir);
PerformanceTable load_table(const std::filesystem::path& dir);

// Deterministic per-fit seed, derived from the root seed and job coordinates.
std::uint64_t fit_seed(std::uint64_t root_seed, const std::string& dataset_name,
                       const std::string& combo_name, int fold);

// Runs `fn(job_index)` for all indices in [0, n) on up to `jobs` threads.
// Exceptions are re-thrown on the calling thread.
void parallel_for_jobs(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace recmeta
