#pragma once

#include <array>
#include <string>

#include "recmeta/interactions.hpp"

namespace recmeta {

constexpr std::size_t kNumMetaFeatures = 12;

extern const std::array<const char*, kNumMetaFeatures> kMetaFeatureNames;

// The 12 scalar dataset characteristics, computed on the pruned dataset.
// Degrees are interaction counts in the binary matrix.
struct MetaFeatureVector {
    double n_users = 0;
    double n_items = 0;
    double n_interactions = 0;
    double density = 0;
    double user_item_ratio = 0;
    double item_user_ratio = 0;
    double max_user_degree = 0;
    double min_user_degree = 0;
    double max_item_degree = 0;
    double min_item_degree = 0;
    double mean_user_degree = 0;
    double mean_item_degree = 0;

    std::array<double, kNumMetaFeatures> values() const {
        return {n_users,         n_items,         n_interactions,  density,
                user_item_ratio, item_user_ratio, max_user_degree, min_user_degree,
                max_item_degree, min_item_degree, mean_user_degree, mean_item_degree};
    }
    static MetaFeatureVector from_values(const std::array<double, kNumMetaFeatures>& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11]};
    }
};

// Throws EmptyDatasetError when the dataset has no interactions.
MetaFeatureVector extract_meta_features(const InteractionDataset& dataset);

// One CSV row per dataset: name followed by the 12 fixed columns.
std::string meta_feature_csv_header();
std::string meta_feature_csv_row(const std::string& dataset_name, const MetaFeatureVector& mf);

}  // namespace recmeta
