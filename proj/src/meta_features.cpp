#include "recmeta/meta_features.hpp"

#include <algorithm>

#include "recmeta/text.hpp"

namespace recmeta {

const std::array<const char*, kNumMetaFeatures> kMetaFeatureNames = {
    "n_users",         "n_items",         "n_interactions",  "density",
    "user_item_ratio", "item_user_ratio", "max_user_degree", "min_user_degree",
    "max_item_degree", "min_item_degree", "mean_user_degree", "mean_item_degree"};

MetaFeatureVector extract_meta_features(const InteractionDataset& dataset) {
    if (dataset.empty()) throw EmptyDatasetError("cannot extract meta-features of an empty dataset");

    const double n_users = static_cast<double>(dataset.n_users());
    const double n_items = static_cast<double>(dataset.n_items());
    const double n = static_cast<double>(dataset.n_interactions());

    std::vector<std::size_t> udeg = dataset.user_degrees();
    std::vector<std::size_t> ideg = dataset.item_degrees();

    MetaFeatureVector mf;
    mf.n_users = n_users;
    mf.n_items = n_items;
    mf.n_interactions = n;
    mf.density = n / (n_users * n_items);
    mf.user_item_ratio = n_users / n_items;
    mf.item_user_ratio = n_items / n_users;
    mf.max_user_degree = static_cast<double>(*std::max_element(udeg.begin(), udeg.end()));
    mf.min_user_degree = static_cast<double>(*std::min_element(udeg.begin(), udeg.end()));
    mf.max_item_degree = static_cast<double>(*std::max_element(ideg.begin(), ideg.end()));
    mf.min_item_degree = static_cast<double>(*std::min_element(ideg.begin(), ideg.end()));
    mf.mean_user_degree = n / n_users;
    mf.mean_item_degree = n / n_items;
    return mf;
}

std::string meta_feature_csv_header() {
    std::string out = "dataset";
    for (const char* name : kMetaFeatureNames) {
        out += ',';
        out += name;
    }
    out += '\n';
    return out;
}

std::string meta_feature_csv_row(const std::string& dataset_name, const MetaFeatureVector& mf) {
    std::string out = dataset_name;
    for (double v : mf.values()) {
        out += ',';
        out += fmt_g12(v);
    }
    out += '\n';
    return out;
}

}  // namespace recmeta
