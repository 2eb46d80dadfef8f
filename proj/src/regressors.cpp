#include "recmeta/regressors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "recmeta/errors.hpp"

namespace recmeta {

using nlohmann::json;

const char* family_name(RegressorFamily f) {
    switch (f) {
        case RegressorFamily::LinearRegression: return "LinearRegression";
        case RegressorFamily::KnnRegressor: return "KnnRegressor";
        case RegressorFamily::RandomForest: return "RandomForest";
        case RegressorFamily::GradientBoostedTrees: return "GradientBoostedTrees";
    }
    return "?";
}

RegressorFamily family_from_name(const std::string& name) {
    for (RegressorFamily f :
         {RegressorFamily::LinearRegression, RegressorFamily::KnnRegressor,
          RegressorFamily::RandomForest, RegressorFamily::GradientBoostedTrees})
        if (name == family_name(f)) return f;
    throw ConfigError("unknown regressor family: " + name);
}

void RegressorSpec::validate() const {
    switch (family) {
        case RegressorFamily::LinearRegression:
            if (!(ridge > 0.0)) throw ConfigError("ridge must be > 0");
            break;
        case RegressorFamily::KnnRegressor:
            if (neighbors < 1) throw ConfigError("neighbors must be >= 1");
            break;
        case RegressorFamily::RandomForest:
            if (trees < 1) throw ConfigError("trees must be >= 1");
            if (max_depth < -1) throw ConfigError("max_depth must be >= 0 or -1");
            break;
        case RegressorFamily::GradientBoostedTrees:
            if (trees < 1) throw ConfigError("trees must be >= 1");
            if (max_depth < -1) throw ConfigError("max_depth must be >= 0 or -1");
            if (!(learning_rate > 0.0 && learning_rate <= 1.0))
                throw ConfigError("learning_rate must be in (0,1]");
            if (!(subsample > 0.0 && subsample <= 1.0))
                throw ConfigError("subsample must be in (0,1]");
            break;
    }
}

std::string regressor_spec_to_json(const RegressorSpec& spec) {
    json j;
    j["family"] = family_name(spec.family);
    switch (spec.family) {
        case RegressorFamily::LinearRegression:
            j["ridge"] = spec.ridge;
            break;
        case RegressorFamily::KnnRegressor:
            j["neighbors"] = spec.neighbors;
            j["weighting"] =
                spec.weighting == KnnWeighting::Uniform ? "uniform" : "inverse-distance";
            break;
        case RegressorFamily::RandomForest:
            j["trees"] = spec.trees;
            j["max_depth"] = spec.max_depth;
            j["features_per_split"] =
                spec.features_per_split == FeatureSubset::Sqrt ? "sqrt" : "all";
            break;
        case RegressorFamily::GradientBoostedTrees:
            j["trees"] = spec.trees;
            j["max_depth"] = spec.max_depth;
            j["learning_rate"] = spec.learning_rate;
            j["subsample"] = spec.subsample;
            break;
    }
    return j.dump();
}

RegressorSpec regressor_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("regressor spec: " + std::string(e.what()));
    }
    RegressorSpec spec;
    spec.family = family_from_name(j.at("family").get<std::string>());
    switch (spec.family) {
        case RegressorFamily::LinearRegression:
            spec.ridge = j.value("ridge", spec.ridge);
            break;
        case RegressorFamily::KnnRegressor: {
            spec.neighbors = j.value("neighbors", spec.neighbors);
            std::string w = j.value("weighting", "uniform");
            if (w == "uniform")
                spec.weighting = KnnWeighting::Uniform;
            else if (w == "inverse-distance")
                spec.weighting = KnnWeighting::InverseDistance;
            else
                throw ConfigError("unknown weighting: " + w);
            break;
        }
        case RegressorFamily::RandomForest: {
            spec.trees = j.value("trees", spec.trees);
            spec.max_depth = j.value("max_depth", spec.max_depth);
            std::string fs = j.value("features_per_split", "sqrt");
            if (fs == "sqrt")
                spec.features_per_split = FeatureSubset::Sqrt;
            else if (fs == "all")
                spec.features_per_split = FeatureSubset::All;
            else
                throw ConfigError("unknown features_per_split: " + fs);
            break;
        }
        case RegressorFamily::GradientBoostedTrees:
            spec.trees = j.value("trees", spec.trees);
            spec.max_depth = j.value("max_depth", spec.max_depth);
            spec.learning_rate = j.value("learning_rate", spec.learning_rate);
            spec.subsample = j.value("subsample", spec.subsample);
            break;
    }
    spec.validate();
    return spec;
}

// ---- CART -----------------------------------------------------------------

double CartTree::predict(std::span<const double> x) const {
    int node = 0;
    while (nodes[node].feature >= 0)
        node = x[nodes[node].feature] < nodes[node].threshold ? nodes[node].left : nodes[node].right;
    return nodes[node].value;
}

namespace {

struct CartBuilder {
    const DataMatrix& X;
    std::span<const double> y;
    const CartParams& params;
    Rng& rng;
    std::vector<CartNode> nodes;
    std::vector<std::uint32_t> scratch;

    int build(std::vector<std::uint32_t>& indices, std::size_t begin, std::size_t end, int depth) {
        const std::size_t n = end - begin;
        double sum = 0.0;
        for (std::size_t p = begin; p < end; ++p) sum += y[indices[p]];
        const double mean = sum / static_cast<double>(n);

        int node_id = static_cast<int>(nodes.size());
        nodes.push_back(CartNode{-1, 0.0, -1, -1, mean});

        if (params.max_depth >= 0 && depth >= params.max_depth) return node_id;
        if (n < static_cast<std::size_t>(params.min_samples_split)) return node_id;

        // candidate features, ascending, optionally subsampled per split
        std::vector<int> features;
        const int d = static_cast<int>(X.cols);
        if (params.max_features > 0 && params.max_features < d) {
            std::vector<int> all(d);
            std::iota(all.begin(), all.end(), 0);
            for (int pick = 0; pick < params.max_features; ++pick) {
                std::size_t j = pick + static_cast<std::size_t>(rng.below(d - pick));
                std::swap(all[pick], all[j]);
            }
            features.assign(all.begin(), all.begin() + params.max_features);
            std::sort(features.begin(), features.end());
        } else {
            features.resize(d);
            std::iota(features.begin(), features.end(), 0);
        }

        // best split: maximize sum_L^2/n_L + sum_R^2/n_R, strict improvement
        // only, ties keep the earliest (feature, position)
        int best_feature = -1;
        double best_gain = -std::numeric_limits<double>::infinity();
        double best_threshold = 0.0;
        for (int f : features) {
            scratch.assign(indices.begin() + begin, indices.begin() + end);
            std::sort(scratch.begin(), scratch.end(), [&](std::uint32_t a, std::uint32_t b) {
                if (X.at(a, f) != X.at(b, f)) return X.at(a, f) < X.at(b, f);
                return a < b;
            });
            double left_sum = 0.0;
            for (std::size_t p = 0; p + 1 < n; ++p) {
                left_sum += y[scratch[p]];
                if (X.at(scratch[p], f) == X.at(scratch[p + 1], f)) continue;
                const double nl = static_cast<double>(p + 1);
                const double nr = static_cast<double>(n - p - 1);
                const double right_sum = sum - left_sum;
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (X.at(scratch[p], f) + X.at(scratch[p + 1], f));
                }
            }
        }
        if (best_feature < 0) return node_id;  // all candidate columns constant

        auto mid = std::stable_partition(
            indices.begin() + begin, indices.begin() + end,
            [&](std::uint32_t i) { return X.at(i, best_feature) < best_threshold; });
        std::size_t split = static_cast<std::size_t>(mid - indices.begin());
        if (split == begin || split == end) return node_id;  // numeric guard

        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        int left = build(indices, begin, split, depth + 1);
        int right = build(indices, split, end, depth + 1);
        nodes[node_id].left = left;
        nodes[node_id].right = right;
        return node_id;
    }
};

}  // namespace

CartTree build_cart(const DataMatrix& X, std::span<const double> y,
                    std::vector<std::uint32_t> indices, const CartParams& params, Rng& rng) {
    CartBuilder builder{X, y, params, rng, {}, {}};
    builder.build(indices, 0, indices.size(), 0);
    CartTree tree;
    tree.nodes = std::move(builder.nodes);
    return tree;
}

// ---- feature transform ------------------------------------------------------

std::vector<double> FeatureTransform::apply(std::span<const double> raw) const {
    std::vector<double> out(raw.size());
    for (std::size_t c = 0; c < raw.size(); ++c) {
        double v = raw[c];
        if (log_scale[c]) v = std::log1p(v);
        out[c] = (v - shift[c]) / scale[c];
    }
    return out;
}

std::vector<std::uint8_t> meta_feature_log_columns() {
    // the integer count columns: n_users, n_items, n_interactions and the
    // four degree extremes
    std::vector<std::uint8_t> cols(kNumMetaFeatures, 0);
    for (std::size_t c : {0u, 1u, 2u, 6u, 7u, 8u, 9u}) cols[c] = 1;
    return cols;
}

namespace {

FeatureTransform learn_transform(const DataMatrix& X, const std::vector<std::uint8_t>& log_columns) {
    FeatureTransform t;
    t.log_scale = log_columns;
    t.log_scale.resize(X.cols, 0);
    t.shift.assign(X.cols, 0.0);
    t.scale.assign(X.cols, 1.0);
    for (std::size_t c = 0; c < X.cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) {
            double v = X.at(r, c);
            if (t.log_scale[c]) v = std::log1p(v);
            sum += v;
        }
        const double mean = sum / static_cast<double>(X.rows);
        double ss = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) {
            double v = X.at(r, c);
            if (t.log_scale[c]) v = std::log1p(v);
            ss += (v - mean) * (v - mean);
        }
        double stddev = std::sqrt(ss / static_cast<double>(X.rows));
        t.shift[c] = mean;
        t.scale[c] = stddev > 0.0 ? stddev : 1.0;
    }
    return t;
}

DataMatrix transform_all(const DataMatrix& X, const FeatureTransform& t) {
    DataMatrix out(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::vector<double> row = t.apply(X.row(r));
        std::copy(row.begin(), row.end(), out.data.begin() + r * out.cols);
    }
    return out;
}

// canonical row order: lexicographic on (features..., label); makes every
// family invariant to the order training rows arrive in
std::vector<std::uint32_t> canonical_order(const DataMatrix& X, std::span<const double> y) {
    std::vector<std::uint32_t> order(X.rows);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        for (std::size_t c = 0; c < X.cols; ++c)
            if (X.at(a, c) != X.at(b, c)) return X.at(a, c) < X.at(b, c);
        return y[a] < y[b];
    });
    return order;
}

void check_finite(const DataMatrix& X, std::span<const double> y) {
    for (double v : X.data)
        if (!std::isfinite(v)) throw NonFiniteInputError("non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw NonFiniteInputError("non-finite label value");
}

int resolve_max_features(const RegressorSpec& spec, std::size_t d) {
    if (spec.features_per_split == FeatureSubset::All) return -1;
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
}

void fit_linear(TrainedRegressor& model, const DataMatrix& Xt, std::span<const double> y) {
    const std::size_t n = Xt.rows, d = Xt.cols;
    Eigen::MatrixXd A(n, d + 1);
    Eigen::VectorXd b(n);
    for (std::size_t r = 0; r < n; ++r) {
        A(r, 0) = 1.0;
        for (std::size_t c = 0; c < d; ++c) A(r, c + 1) = Xt.at(r, c);
        b(r) = y[r];
    }
    Eigen::MatrixXd M = A.transpose() * A;
    M.diagonal().array() += model.spec.ridge;
    Eigen::VectorXd beta = M.ldlt().solve(A.transpose() * b);
    model.linear_coef.assign(beta.data(), beta.data() + beta.size());
}

void fit_knn(TrainedRegressor& model, const DataMatrix& Xt, std::span<const double> y) {
    model.knn_points = Xt;
    model.knn_labels.assign(y.begin(), y.end());
}

void fit_forest(TrainedRegressor& model, const DataMatrix& Xt, std::span<const double> y) {
    CartParams params;
    params.max_depth = model.spec.max_depth;
    params.max_features = resolve_max_features(model.spec, Xt.cols);
    const std::size_t n = Xt.rows;
    model.forest.reserve(model.spec.trees);
    for (int t = 0; t < model.spec.trees; ++t) {
        Rng rng(derive_seed(model.spec.seed, "rf-tree", static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> sample(n);
        for (std::size_t i = 0; i < n; ++i) sample[i] = static_cast<std::uint32_t>(rng.below(n));
        std::sort(sample.begin(), sample.end());
        model.forest.push_back(build_cart(Xt, y, std::move(sample), params, rng));
    }
}

void fit_gbt(TrainedRegressor& model, const DataMatrix& Xt, std::span<const double> y) {
    CartParams params;
    params.max_depth = model.spec.max_depth;
    params.max_features = -1;
    const std::size_t n = Xt.rows;

    model.boost_base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> residual(y.begin(), y.end());
    for (double& r : residual) r -= model.boost_base;

    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    model.boost_stages.reserve(model.spec.trees);
    for (int t = 0; t < model.spec.trees; ++t) {
        Rng rng(derive_seed(model.spec.seed, "gbt-stage", static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> sample;
        if (model.spec.subsample < 1.0) {
            std::size_t m = std::max<std::size_t>(
                1, static_cast<std::size_t>(model.spec.subsample * static_cast<double>(n)));
            std::vector<std::uint32_t> pool = all;
            for (std::size_t pick = 0; pick < m; ++pick) {
                std::size_t j = pick + static_cast<std::size_t>(rng.below(n - pick));
                std::swap(pool[pick], pool[j]);
            }
            sample.assign(pool.begin(), pool.begin() + m);
            std::sort(sample.begin(), sample.end());
        } else {
            sample = all;
        }
        CartTree tree = build_cart(Xt, residual, std::move(sample), params, rng);
        for (std::size_t r = 0; r < n; ++r)
            residual[r] -= model.spec.learning_rate * tree.predict(Xt.row(r));
        model.boost_stages.push_back(std::move(tree));
    }
}

}  // namespace

double TrainedRegressor::predict_transformed(std::span<const double> xt) const {
    switch (spec.family) {
        case RegressorFamily::LinearRegression: {
            double v = linear_coef[0];
            for (std::size_t c = 0; c < xt.size(); ++c) v += linear_coef[c + 1] * xt[c];
            return v;
        }
        case RegressorFamily::KnnRegressor: {
            const std::size_t n = knn_points.rows;
            std::vector<std::pair<double, std::uint32_t>> dist(n);
            for (std::size_t r = 0; r < n; ++r) {
                double d2 = 0.0;
                for (std::size_t c = 0; c < xt.size(); ++c) {
                    double diff = knn_points.at(r, c) - xt[c];
                    d2 += diff * diff;
                }
                dist[r] = {d2, static_cast<std::uint32_t>(r)};
            }
            std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(spec.neighbors), n);
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            if (spec.weighting == KnnWeighting::Uniform) {
                double sum = 0.0;
                for (std::size_t p = 0; p < k; ++p) sum += knn_labels[dist[p].second];
                return sum / static_cast<double>(k);
            }
            // exact matches dominate inverse-distance weighting
            if (dist[0].first == 0.0) {
                double sum = 0.0;
                std::size_t count = 0;
                for (std::size_t p = 0; p < k && dist[p].first == 0.0; ++p) {
                    sum += knn_labels[dist[p].second];
                    ++count;
                }
                return sum / static_cast<double>(count);
            }
            double wsum = 0.0, vsum = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                double w = 1.0 / std::sqrt(dist[p].first);
                wsum += w;
                vsum += w * knn_labels[dist[p].second];
            }
            return vsum / wsum;
        }
        case RegressorFamily::RandomForest: {
            double sum = 0.0;
            for (const CartTree& tree : forest) sum += tree.predict(xt);
            return sum / static_cast<double>(forest.size());
        }
        case RegressorFamily::GradientBoostedTrees: {
            double v = boost_base;
            for (const CartTree& tree : boost_stages) v += spec.learning_rate * tree.predict(xt);
            return v;
        }
    }
    throw Error("unreachable");
}

TrainedRegressor fit_regressor(const RegressorSpec& spec, const DataMatrix& X,
                               std::span<const double> y,
                               const std::vector<std::uint8_t>& log_columns) {
    spec.validate();
    if (X.rows != y.size()) throw DimensionMismatchError("feature/label row counts differ");
    if (X.rows < 2) throw DimensionMismatchError("need at least 2 training rows");
    check_finite(X, y);

    std::vector<std::uint32_t> order = canonical_order(X, y);
    DataMatrix Xc(X.rows, X.cols);
    std::vector<double> yc(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::copy(X.row(order[r]).begin(), X.row(order[r]).end(), Xc.data.begin() + r * Xc.cols);
        yc[r] = y[order[r]];
    }

    TrainedRegressor model;
    model.spec = spec;
    model.transform = learn_transform(Xc, log_columns);
    DataMatrix Xt = transform_all(Xc, model.transform);

    switch (spec.family) {
        case RegressorFamily::LinearRegression: fit_linear(model, Xt, yc); break;
        case RegressorFamily::KnnRegressor: fit_knn(model, Xt, yc); break;
        case RegressorFamily::RandomForest: fit_forest(model, Xt, yc); break;
        case RegressorFamily::GradientBoostedTrees: fit_gbt(model, Xt, yc); break;
    }
    return model;
}

TrainedRegressor fit_regressor(const RegressorSpec& spec,
                               const std::vector<MetaFeatureVector>& X, std::span<const double> y) {
    return fit_regressor(spec, to_matrix(X), y, meta_feature_log_columns());
}

double predict(const TrainedRegressor& model, std::span<const double> raw) {
    for (double v : raw)
        if (!std::isfinite(v)) throw NonFiniteInputError("non-finite query value");
    std::vector<double> xt = model.transform.apply(raw);
    double out = model.predict_transformed(xt);
    if (!std::isfinite(out)) throw NonFiniteInputError("non-finite prediction");
    return out;
}

double predict(const TrainedRegressor& model, const MetaFeatureVector& x) {
    auto values = x.values();
    return predict(model, std::span<const double>(values.data(), values.size()));
}

RegressorSpec grid_search(const std::vector<RegressorSpec>& grid, const DataMatrix& X,
                          std::span<const double> y, const std::vector<std::uint8_t>& log_columns,
                          int inner_folds, std::uint64_t seed) {
    if (grid.empty()) throw EmptyGridError("grid_search needs a non-empty grid");
    if (X.rows != y.size()) throw DimensionMismatchError("feature/label row counts differ");
    if (X.rows < static_cast<std::size_t>(inner_folds))
        throw DimensionMismatchError("need at least inner_folds rows");
    check_finite(X, y);

    // canonical order, then a seeded shuffle dealt round-robin into folds
    std::vector<std::uint32_t> order = canonical_order(X, y);
    Rng rng(derive_seed(seed, "grid-cv"));
    rng.shuffle(order);
    std::vector<int> fold_of(X.rows);
    for (std::size_t p = 0; p < order.size(); ++p)
        fold_of[order[p]] = static_cast<int>(p % static_cast<std::size_t>(inner_folds));

    double best_rmse = std::numeric_limits<double>::infinity();
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total_sq = 0.0;
        std::size_t total_n = 0;
        for (int f = 0; f < inner_folds; ++f) {
            DataMatrix Xtr;
            Xtr.cols = X.cols;
            std::vector<double> ytr;
            std::vector<std::uint32_t> val_rows;
            for (std::size_t r = 0; r < X.rows; ++r) {
                if (fold_of[r] == f) {
                    val_rows.push_back(static_cast<std::uint32_t>(r));
                } else {
                    Xtr.data.insert(Xtr.data.end(), X.row(r).begin(), X.row(r).end());
                    ytr.push_back(y[r]);
                    Xtr.rows++;
                }
            }
            RegressorSpec spec = grid[g];
            spec.seed = derive_seed(seed, "grid-fit", g, static_cast<std::uint64_t>(f));
            TrainedRegressor model = fit_regressor(spec, Xtr, ytr, log_columns);
            for (std::uint32_t r : val_rows) {
                double err = predict(model, X.row(r)) - y[r];
                total_sq += err * err;
                ++total_n;
            }
        }
        double rmse = std::sqrt(total_sq / static_cast<double>(total_n));
        if (rmse < best_rmse) {
            best_rmse = rmse;
            best_g = g;
        }
    }

    RegressorSpec winner = grid[best_g];
    winner.seed = derive_seed(seed, "winner", best_g);
    return winner;
}

RegressorSpec grid_search(const std::vector<RegressorSpec>& grid,
                          const std::vector<MetaFeatureVector>& X, std::span<const double> y,
                          int inner_folds, std::uint64_t seed) {
    return grid_search(grid, to_matrix(X), y, meta_feature_log_columns(), inner_folds, seed);
}

std::vector<RegressorSpec> default_grid(RegressorFamily family) {
    std::vector<RegressorSpec> grid;
    RegressorSpec base;
    base.family = family;
    switch (family) {
        case RegressorFamily::LinearRegression:
            for (double ridge : {1e-8, 1e-2, 1.0}) {
                base.ridge = ridge;
                grid.push_back(base);
            }
            break;
        case RegressorFamily::KnnRegressor:
            for (int k : {1, 3, 5, 7})
                for (KnnWeighting w : {KnnWeighting::Uniform, KnnWeighting::InverseDistance}) {
                    base.neighbors = k;
                    base.weighting = w;
                    grid.push_back(base);
                }
            break;
        case RegressorFamily::RandomForest:
            for (int trees : {100, 300})
                for (int depth : {4, 8, -1})
                    for (FeatureSubset fs : {FeatureSubset::Sqrt, FeatureSubset::All}) {
                        base.trees = trees;
                        base.max_depth = depth;
                        base.features_per_split = fs;
                        grid.push_back(base);
                    }
            break;
        case RegressorFamily::GradientBoostedTrees:
            for (int trees : {100, 300})
                for (int depth : {2, 3})
                    for (double lr : {0.05, 0.1})
                        for (double sub : {0.8, 1.0}) {
                            base.trees = trees;
                            base.max_depth = depth;
                            base.learning_rate = lr;
                            base.subsample = sub;
                            grid.push_back(base);
                        }
            break;
    }
    return grid;
}

DataMatrix to_matrix(const std::vector<MetaFeatureVector>& X) {
    DataMatrix m(X.size(), kNumMetaFeatures);
    for (std::size_t r = 0; r < X.size(); ++r) {
        auto values = X[r].values();
        std::copy(values.begin(), values.end(), m.data.begin() + r * kNumMetaFeatures);
    }
    return m;
}

}  // namespace recmeta
