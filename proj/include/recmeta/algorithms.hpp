#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "recmeta/interactions.hpp"

namespace recmeta {

enum class Algorithm { Random, Popularity, UserKNN, ItemKNN, ImplicitALS, EASE };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct AlgoComboId {
    Algorithm algorithm = Algorithm::Random;
    int config_index = 0;

    bool operator==(const AlgoComboId&) const = default;
};

struct AlgoParams {
    int neighbors = 0;            // UserKNN / ItemKNN
    int factors = 0;              // ImplicitALS
    double regularization = 0.0;  // ImplicitALS
    int epochs = 0;               // ImplicitALS
    double alpha = 40.0;          // ImplicitALS confidence weight
    double ridge = 0.0;           // EASE
};

struct ComboSpec {
    AlgoComboId id;
    AlgoParams params;

    // e.g. "ItemKNN.1"; used in CSV files and for tie-breaking
    std::string name() const;
};

// The default zoo: Random, Popularity, UserKNN x2, ItemKNN x2, ImplicitALS x2,
// EASE x2 (10 combos). Order defines combo ids.
std::vector<ComboSpec> default_zoo();

// Binary training matrix in CSR form, both orientations. Row lists are sorted.
struct TrainMatrix {
    std::uint32_t n_users = 0;
    std::uint32_t n_items = 0;
    std::vector<std::uint32_t> user_ptr, user_items;
    std::vector<std::uint32_t> item_ptr, item_users;

    static TrainMatrix from_interactions(std::span<const Interaction> interactions,
                                         std::uint32_t n_users, std::uint32_t n_items);

    std::span<const ItemIndex> items_of(UserIndex u) const {
        return {user_items.data() + user_ptr[u], user_items.data() + user_ptr[u + 1]};
    }
    std::span<const UserIndex> users_of(ItemIndex i) const {
        return {item_users.data() + item_ptr[i], item_users.data() + item_ptr[i + 1]};
    }
    std::size_t user_degree(UserIndex u) const { return user_ptr[u + 1] - user_ptr[u]; }
    std::size_t item_degree(ItemIndex i) const { return item_ptr[i + 1] - item_ptr[i]; }
};

struct TopKRecommendations {
    UserIndex user = 0;
    std::vector<ItemIndex> ranked_items;
};

class FittedModel {
public:
    virtual ~FittedModel() = default;

    const ComboSpec& combo() const { return combo_; }
    std::uint32_t n_users() const { return n_users_; }
    std::uint32_t n_items() const { return n_items_; }
    bool budget_exhausted() const { return budget_exhausted_; }
    bool knows_user(UserIndex u) const { return u < n_users_ && trained_user_[u]; }

    const std::string& dataset_id() const { return dataset_id_; }
    int fold() const { return fold_; }
    void set_provenance(std::string dataset_id, int fold) {
        dataset_id_ = std::move(dataset_id);
        fold_ = fold;
    }

    // Fills out[i] with the model's score for every item. `seen` is the
    // user's sorted training item list; exclusion of seen items happens in
    // recommend(), not here.
    virtual void score_items(UserIndex user, std::span<const ItemIndex> seen,
                             std::vector<double>& out) const = 0;

protected:
    FittedModel(ComboSpec combo, const TrainMatrix& train);

    ComboSpec combo_;
    std::uint32_t n_users_ = 0;
    std::uint32_t n_items_ = 0;
    std::vector<std::uint8_t> trained_user_;
    bool budget_exhausted_ = false;
    std::string dataset_id_;
    int fold_ = -1;

    friend std::unique_ptr<FittedModel> fit(const ComboSpec&, const TrainMatrix&, double,
                                            std::uint64_t);
};

// Concrete models are exposed so tests can inspect learned state.

class RandomModel final : public FittedModel {
public:
    RandomModel(ComboSpec combo, const TrainMatrix& train, std::uint64_t seed);
    void score_items(UserIndex user, std::span<const ItemIndex> seen,
                     std::vector<double>& out) const override;

private:
    std::uint64_t seed_;
};

class PopularityModel final : public FittedModel {
public:
    PopularityModel(ComboSpec combo, const TrainMatrix& train);
    void score_items(UserIndex user, std::span<const ItemIndex> seen,
                     std::vector<double>& out) const override;
    const std::vector<double>& item_counts() const { return counts_; }

private:
    std::vector<double> counts_;
};

// Neighbor list entry, sorted by (similarity desc, index asc).
struct Neighbor {
    std::uint32_t index;
    double similarity;
};

class ItemKnnModel final : public FittedModel {
public:
    ItemKnnModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds);
    void score_items(UserIndex user, std::span<const ItemIndex> seen,
                     std::vector<double>& out) const override;
    // 0 when j is not among i's stored neighbors
    double similarity(ItemIndex i, ItemIndex j) const;

private:
    std::vector<std::vector<Neighbor>> neighbors_;  // per item
};

class UserKnnModel final : public FittedModel {
public:
    UserKnnModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds);
    void score_items(UserIndex user, std::span<const ItemIndex> seen,
                     std::vector<double>& out) const override;
    double similarity(UserIndex u, UserIndex v) const;

private:
    std::vector<std::vector<Neighbor>> neighbors_;  // per user
    std::vector<std::uint32_t> user_ptr_, user_items_;
};

class AlsModel final : public FittedModel {
public:
    AlsModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds, std::uint64_t seed);
    void score_items(UserIndex user, std::span<const ItemIndex> seen,
                     std::vector<double>& out) const override;
    const Eigen::MatrixXd& user_factors() const { return user_factors_; }
    const Eigen::MatrixXd& item_factors() const { return item_factors_; }
    int epochs_run() const { return epochs_run_; }

private:
    Eigen::MatrixXd user_factors_;  // n_users x k
    Eigen::MatrixXd item_factors_;  // n_items x k
    int epochs_run_ = 0;
};

class EaseModel final : public FittedModel {
public:
    EaseModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds);
    void score_items(UserIndex user, std::span<const ItemIndex> seen,
                     std::vector<double>& out) const override;
    const Eigen::MatrixXd& weights() const { return weights_; }

private:
    Eigen::MatrixXd weights_;  // item x item, zero diagonal
};

// Full confidence-weighted factorization objective, evaluated densely. Test
// support for the epoch-monotonicity property; O(n_users * n_items * k).
double als_objective(const TrainMatrix& train, const Eigen::MatrixXd& user_factors,
                     const Eigen::MatrixXd& item_factors, double regularization, double alpha);

// Trains `combo` on `train` within a wall-clock budget. Iterative algorithms
// stop between epochs when the budget runs out and set budget_exhausted.
std::unique_ptr<FittedModel> fit(const ComboSpec& combo, const TrainMatrix& train,
                                 double budget_seconds, std::uint64_t seed);

// Top-k unseen items by score, ties broken by ascending item index. Throws
// UnknownUserError for users without training interactions.
TopKRecommendations recommend(const FittedModel& model, UserIndex user, int k,
                              std::span<const ItemIndex> seen);

}  // namespace recmeta
