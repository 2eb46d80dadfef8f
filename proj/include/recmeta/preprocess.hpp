#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "recmeta/interactions.hpp"

namespace recmeta {

// One train/test partition of a pruned dataset. Both sides are sorted by
// (user, item); together they cover every interaction exactly once.
struct FoldSplit {
    int fold_index = 0;
    std::vector<Interaction> train;
    std::vector<Interaction> test;
};

struct CvPlan {
    std::uint64_t seed = 0;
    std::vector<FoldSplit> folds;
};

// Maximal sub-dataset in which every user and every item has at least k
// interactions. Indices are re-compacted; the result may be empty.
InteractionDataset k_core_prune(const InteractionDataset& dataset, int k = 5);

// Per-user seeded shuffle + round-robin dealing into n_folds test buckets, so
// the test sets partition the interactions and per-user fold sizes differ by
// at most one. Requires every user to have >= n_folds interactions.
CvPlan make_cv_plan(const InteractionDataset& dataset, int n_folds, std::uint64_t seed);

// Audit format: fold,user,item,role with role in {train,test}, original tokens.
std::string export_cv_plan_csv(const CvPlan& plan, const InteractionDataset& dataset);
void export_cv_plan_csv_file(const CvPlan& plan, const InteractionDataset& dataset,
                             const std::filesystem::path& path);

}  // namespace recmeta
