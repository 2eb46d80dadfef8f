#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "recmeta/meta_features.hpp"
#include "recmeta/rng.hpp"

namespace recmeta {

enum class RegressorFamily { LinearRegression, KnnRegressor, RandomForest, GradientBoostedTrees };
enum class KnnWeighting { Uniform, InverseDistance };
enum class FeatureSubset { Sqrt, All };

const char* family_name(RegressorFamily f);
RegressorFamily family_from_name(const std::string& name);

struct RegressorSpec {
    RegressorFamily family = RegressorFamily::LinearRegression;

    double ridge = 1e-8;  // LinearRegression

    int neighbors = 5;  // KnnRegressor
    KnnWeighting weighting = KnnWeighting::Uniform;

    int trees = 100;    // RandomForest / GradientBoostedTrees
    int max_depth = -1; // -1 = unlimited
    FeatureSubset features_per_split = FeatureSubset::Sqrt;  // RandomForest

    double learning_rate = 0.1;  // GradientBoostedTrees
    double subsample = 1.0;      // GradientBoostedTrees

    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError on out-of-range values
};

std::string regressor_spec_to_json(const RegressorSpec& spec);
RegressorSpec regressor_spec_from_json(const std::string& text);

// Dense row-major matrix; the regressors are written against this rather than
// the 12-feature vector so that tests can use arbitrary dimensionality.
struct DataMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    DataMatrix() = default;
    DataMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// ---- CART regression trees ----------------------------------------------

struct CartParams {
    int max_depth = -1;  // -1 = unlimited, 0 = single leaf
    int min_samples_split = 2;
    int max_features = -1;  // -1 = all; otherwise sampled per split
};

struct CartNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct CartTree {
    std::vector<CartNode> nodes;
    double predict(std::span<const double> x) const;
};

// Variance-reduction splits over candidate thresholds between distinct
// consecutive sorted values; ties resolved toward the lower feature index and
// earlier split position. `indices` selects (with multiplicity) the training
// rows to use.
CartTree build_cart(const DataMatrix& X, std::span<const double> y,
                    std::vector<std::uint32_t> indices, const CartParams& params, Rng& rng);

// ---- trained models -------------------------------------------------------

struct FeatureTransform {
    std::vector<std::uint8_t> log_scale;  // per column: apply log1p first
    std::vector<double> shift, scale;

    std::vector<double> apply(std::span<const double> raw) const;
};

// Raw count columns of the meta-feature vector, transformed by log1p before
// standardization.
std::vector<std::uint8_t> meta_feature_log_columns();

class TrainedRegressor {
public:
    RegressorSpec spec;
    FeatureTransform transform;

    // family state (only the fitted one is populated)
    std::vector<double> linear_coef;  // intercept first
    DataMatrix knn_points;
    std::vector<double> knn_labels;
    std::vector<CartTree> forest;
    std::vector<CartTree> boost_stages;
    double boost_base = 0.0;

    double predict_transformed(std::span<const double> xt) const;
};

// Fits one regressor on (X, y). X rows are raw feature vectors; the transform
// (log1p on count columns, then standardization) is learned here. Rows are
// canonicalized internally, so row order never affects the model.
TrainedRegressor fit_regressor(const RegressorSpec& spec, const DataMatrix& X,
                               std::span<const double> y,
                               const std::vector<std::uint8_t>& log_columns);

TrainedRegressor fit_regressor(const RegressorSpec& spec,
                               const std::vector<MetaFeatureVector>& X, std::span<const double> y);

double predict(const TrainedRegressor& model, std::span<const double> raw);
double predict(const TrainedRegressor& model, const MetaFeatureVector& x);

// Inner k-fold cross-validated RMSE per grid point; returns the spec with the
// lowest mean RMSE, ties broken by grid order.
RegressorSpec grid_search(const std::vector<RegressorSpec>& grid, const DataMatrix& X,
                          std::span<const double> y, const std::vector<std::uint8_t>& log_columns,
                          int inner_folds, std::uint64_t seed);

RegressorSpec grid_search(const std::vector<RegressorSpec>& grid,
                          const std::vector<MetaFeatureVector>& X, std::span<const double> y,
                          int inner_folds, std::uint64_t seed);

std::vector<RegressorSpec> default_grid(RegressorFamily family);

DataMatrix to_matrix(const std::vector<MetaFeatureVector>& X);

}  // namespace recmeta
