#include "recmeta/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "recmeta/rng.hpp"

namespace recmeta {

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// keep the strongest `n` neighbors, ordered by (similarity desc, index asc)
void keep_top_n(std::vector<Neighbor>& candidates, std::size_t n) {
    auto cmp = [](const Neighbor& a, const Neighbor& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.index < b.index;
    };
    if (candidates.size() > n) {
        std::nth_element(candidates.begin(), candidates.begin() + n, candidates.end(), cmp);
        candidates.resize(n);
    }
    std::sort(candidates.begin(), candidates.end(), cmp);
}

// cosine neighbor lists over the rows of a bipartite CSR (items of items, or
// users of users, depending on orientation)
std::vector<std::vector<Neighbor>> cosine_neighbors(std::uint32_t n_rows,
                                                    auto&& cols_of_row, auto&& rows_of_col,
                                                    auto&& degree_of_row, std::size_t top_n,
                                                    double budget_seconds, bool& exhausted) {
    Stopwatch clock;
    std::vector<std::vector<Neighbor>> out(n_rows);
    std::vector<double> overlap(n_rows, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::uint32_t r = 0; r < n_rows; ++r) {
        if ((r & 127u) == 0 && clock.seconds() > budget_seconds) {
            exhausted = true;
            break;
        }
        touched.clear();
        for (std::uint32_t c : cols_of_row(r)) {
            for (std::uint32_t s : rows_of_col(c)) {
                if (s == r) continue;
                if (overlap[s] == 0.0) touched.push_back(s);
                overlap[s] += 1.0;
            }
        }
        const double deg_r = static_cast<double>(degree_of_row(r));
        std::vector<Neighbor> candidates;
        candidates.reserve(touched.size());
        for (std::uint32_t s : touched) {
            double sim = overlap[s] / std::sqrt(deg_r * static_cast<double>(degree_of_row(s)));
            candidates.push_back(Neighbor{s, sim});
            overlap[s] = 0.0;
        }
        keep_top_n(candidates, top_n);
        out[r] = std::move(candidates);
    }
    return out;
}

double neighbor_similarity(const std::vector<std::vector<Neighbor>>& lists, std::uint32_t a,
                           std::uint32_t b) {
    for (const Neighbor& n : lists[a])
        if (n.index == b) return n.similarity;
    return 0.0;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Random: return "Random";
        case Algorithm::Popularity: return "Popularity";
        case Algorithm::UserKNN: return "UserKNN";
        case Algorithm::ItemKNN: return "ItemKNN";
        case Algorithm::ImplicitALS: return "ImplicitALS";
        case Algorithm::EASE: return "EASE";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    for (Algorithm a : {Algorithm::Random, Algorithm::Popularity, Algorithm::UserKNN,
                        Algorithm::ItemKNN, Algorithm::ImplicitALS, Algorithm::EASE})
        if (name == algorithm_name(a)) return a;
    throw ConfigError("unknown algorithm: " + name);
}

std::string ComboSpec::name() const {
    return std::string(algorithm_name(id.algorithm)) + "." + std::to_string(id.config_index);
}

std::vector<ComboSpec> default_zoo() {
    std::vector<ComboSpec> zoo;
    auto add = [&](Algorithm a, int cfg, AlgoParams p) { zoo.push_back({{a, cfg}, p}); };
    add(Algorithm::Random, 0, {});
    add(Algorithm::Popularity, 0, {});
    add(Algorithm::UserKNN, 0, {.neighbors = 20});
    add(Algorithm::UserKNN, 1, {.neighbors = 100});
    add(Algorithm::ItemKNN, 0, {.neighbors = 20});
    add(Algorithm::ItemKNN, 1, {.neighbors = 100});
    add(Algorithm::ImplicitALS, 0, {.factors = 32, .regularization = 0.01, .epochs = 20});
    add(Algorithm::ImplicitALS, 1, {.factors = 128, .regularization = 0.1, .epochs = 20});
    add(Algorithm::EASE, 0, {.ridge = 10.0});
    add(Algorithm::EASE, 1, {.ridge = 500.0});
    return zoo;
}

TrainMatrix TrainMatrix::from_interactions(std::span<const Interaction> interactions,
                                           std::uint32_t n_users, std::uint32_t n_items) {
    TrainMatrix m;
    m.n_users = n_users;
    m.n_items = n_items;
    m.user_ptr.assign(n_users + 1, 0);
    m.item_ptr.assign(n_items + 1, 0);
    for (const auto& [u, i] : interactions) {
        m.user_ptr[u + 1]++;
        m.item_ptr[i + 1]++;
    }
    for (std::uint32_t u = 0; u < n_users; ++u) m.user_ptr[u + 1] += m.user_ptr[u];
    for (std::uint32_t i = 0; i < n_items; ++i) m.item_ptr[i + 1] += m.item_ptr[i];
    m.user_items.resize(interactions.size());
    m.item_users.resize(interactions.size());
    std::vector<std::uint32_t> ucur(m.user_ptr.begin(), m.user_ptr.end() - 1);
    std::vector<std::uint32_t> icur(m.item_ptr.begin(), m.item_ptr.end() - 1);
    for (const auto& [u, i] : interactions) {
        m.user_items[ucur[u]++] = i;
        m.item_users[icur[i]++] = u;
    }
    for (std::uint32_t u = 0; u < n_users; ++u)
        std::sort(m.user_items.begin() + m.user_ptr[u], m.user_items.begin() + m.user_ptr[u + 1]);
    for (std::uint32_t i = 0; i < n_items; ++i)
        std::sort(m.item_users.begin() + m.item_ptr[i], m.item_users.begin() + m.item_ptr[i + 1]);
    return m;
}

FittedModel::FittedModel(ComboSpec combo, const TrainMatrix& train)
    : combo_(std::move(combo)), n_users_(train.n_users), n_items_(train.n_items) {
    trained_user_.assign(n_users_, 0);
    for (UserIndex u = 0; u < n_users_; ++u)
        if (train.user_degree(u) > 0) trained_user_[u] = 1;
}

RandomModel::RandomModel(ComboSpec combo, const TrainMatrix& train, std::uint64_t seed)
    : FittedModel(std::move(combo), train), seed_(seed) {}

void RandomModel::score_items(UserIndex user, std::span<const ItemIndex>,
                              std::vector<double>& out) const {
    out.resize(n_items_);
    for (ItemIndex i = 0; i < n_items_; ++i) {
        Rng rng(derive_seed(seed_, "random-score", user, i));
        out[i] = rng.uniform01();
    }
}

PopularityModel::PopularityModel(ComboSpec combo, const TrainMatrix& train)
    : FittedModel(std::move(combo), train) {
    counts_.resize(train.n_items);
    for (ItemIndex i = 0; i < train.n_items; ++i)
        counts_[i] = static_cast<double>(train.item_degree(i));
}

void PopularityModel::score_items(UserIndex, std::span<const ItemIndex>,
                                  std::vector<double>& out) const {
    out = counts_;
}

ItemKnnModel::ItemKnnModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds)
    : FittedModel(std::move(combo), train) {
    neighbors_ = cosine_neighbors(
        train.n_items, [&](std::uint32_t i) { return train.users_of(i); },
        [&](std::uint32_t u) { return train.items_of(u); },
        [&](std::uint32_t i) { return train.item_degree(i); },
        static_cast<std::size_t>(combo_.params.neighbors), budget_seconds, budget_exhausted_);
}

void ItemKnnModel::score_items(UserIndex, std::span<const ItemIndex> seen,
                               std::vector<double>& out) const {
    std::vector<std::uint8_t> seen_mask(n_items_, 0);
    for (ItemIndex j : seen) seen_mask[j] = 1;
    out.assign(n_items_, 0.0);
    for (ItemIndex i = 0; i < n_items_; ++i) {
        double score = 0.0;
        for (const Neighbor& n : neighbors_[i])
            if (seen_mask[n.index]) score += n.similarity;
        out[i] = score;
    }
}

double ItemKnnModel::similarity(ItemIndex i, ItemIndex j) const {
    return neighbor_similarity(neighbors_, i, j);
}

UserKnnModel::UserKnnModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds)
    : FittedModel(std::move(combo), train) {
    neighbors_ = cosine_neighbors(
        train.n_users, [&](std::uint32_t u) { return train.items_of(u); },
        [&](std::uint32_t i) { return train.users_of(i); },
        [&](std::uint32_t u) { return train.user_degree(u); },
        static_cast<std::size_t>(combo_.params.neighbors), budget_seconds, budget_exhausted_);
    user_ptr_ = train.user_ptr;
    user_items_ = train.user_items;
}

void UserKnnModel::score_items(UserIndex user, std::span<const ItemIndex>,
                               std::vector<double>& out) const {
    out.assign(n_items_, 0.0);
    for (const Neighbor& n : neighbors_[user]) {
        for (std::uint32_t p = user_ptr_[n.index]; p < user_ptr_[n.index + 1]; ++p)
            out[user_items_[p]] += n.similarity;
    }
}

double UserKnnModel::similarity(UserIndex u, UserIndex v) const {
    return neighbor_similarity(neighbors_, u, v);
}

AlsModel::AlsModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds,
                   std::uint64_t seed)
    : FittedModel(std::move(combo), train) {
    Stopwatch clock;
    const int k = combo_.params.factors;
    const double lambda = combo_.params.regularization;
    const double alpha = combo_.params.alpha;

    Rng rng(derive_seed(seed, "als-init"));
    auto init = [&](Eigen::MatrixXd& m, std::uint32_t rows) {
        m.resize(rows, k);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (int f = 0; f < k; ++f) m(r, f) = 0.1 * (rng.uniform01() - 0.5);
    };
    init(user_factors_, train.n_users);
    init(item_factors_, train.n_items);

    Eigen::MatrixXd gram(k, k);
    Eigen::MatrixXd system(k, k);
    Eigen::VectorXd rhs(k);

    // exact alternating ridge solves; each half-step minimizes the objective
    // for its side, so the full objective is non-increasing across epochs
    auto solve_side = [&](Eigen::MatrixXd& target, const Eigen::MatrixXd& fixed,
                          std::uint32_t n_rows, auto&& cols_of_row) {
        gram.noalias() = fixed.transpose() * fixed;
        for (std::uint32_t r = 0; r < n_rows; ++r) {
            auto cols = cols_of_row(r);
            if (cols.empty()) {
                target.row(r).setZero();
                continue;
            }
            system = gram;
            system.diagonal().array() += lambda;
            rhs.setZero();
            for (std::uint32_t c : cols) {
                system.selfadjointView<Eigen::Lower>().rankUpdate(fixed.row(c).transpose(), alpha);
                rhs += (1.0 + alpha) * fixed.row(c).transpose();
            }
            // llt() reads only the lower triangle, which rankUpdate maintained
            target.row(r) = system.llt().solve(rhs).transpose();
        }
    };

    for (int epoch = 0; epoch < combo_.params.epochs; ++epoch) {
        if (clock.seconds() > budget_seconds) {
            budget_exhausted_ = true;
            break;
        }
        solve_side(user_factors_, item_factors_, train.n_users,
                   [&](std::uint32_t u) { return train.items_of(u); });
        solve_side(item_factors_, user_factors_, train.n_items,
                   [&](std::uint32_t i) { return train.users_of(i); });
        epochs_run_++;
    }
}

void AlsModel::score_items(UserIndex user, std::span<const ItemIndex>,
                           std::vector<double>& out) const {
    out.resize(n_items_);
    Eigen::VectorXd scores = item_factors_ * user_factors_.row(user).transpose();
    Eigen::VectorXd::Map(out.data(), scores.size()) = scores;
}

double als_objective(const TrainMatrix& train, const Eigen::MatrixXd& user_factors,
                     const Eigen::MatrixXd& item_factors, double regularization, double alpha) {
    double loss = 0.0;
    for (std::uint32_t u = 0; u < train.n_users; ++u) {
        auto items = train.items_of(u);
        std::size_t pos = 0;
        for (std::uint32_t i = 0; i < train.n_items; ++i) {
            bool interacted = pos < items.size() && items[pos] == i;
            if (interacted) ++pos;
            double pred = user_factors.row(u).dot(item_factors.row(i));
            double confidence = interacted ? 1.0 + alpha : 1.0;
            double target = interacted ? 1.0 : 0.0;
            loss += confidence * (target - pred) * (target - pred);
        }
    }
    loss += regularization * (user_factors.squaredNorm() + item_factors.squaredNorm());
    return loss;
}

EaseModel::EaseModel(ComboSpec combo, const TrainMatrix& train, double budget_seconds)
    : FittedModel(std::move(combo), train) {
    Stopwatch clock;
    const std::uint32_t n = train.n_items;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    for (std::uint32_t u = 0; u < train.n_users; ++u) {
        auto items = train.items_of(u);
        for (std::size_t a = 0; a < items.size(); ++a)
            for (std::size_t b = 0; b < items.size(); ++b) gram(items[a], items[b]) += 1.0;
    }

    // The closed form is exempt from budget checks at desk scale; for very
    // large item sets the Gram stage is the fallback checkpoint.
    constexpr std::uint32_t kClosedFormCeiling = 8192;
    if (n > kClosedFormCeiling && clock.seconds() > budget_seconds) {
        budget_exhausted_ = true;
        weights_ = std::move(gram);
        weights_.diagonal().setZero();
        return;
    }

    gram.diagonal().array() += combo_.params.ridge;
    Eigen::MatrixXd inv = gram.llt().solve(Eigen::MatrixXd::Identity(n, n));
    weights_.resize(n, n);
    for (std::uint32_t j = 0; j < n; ++j) weights_.col(j) = -inv.col(j) / inv(j, j);
    weights_.diagonal().setZero();
}

void EaseModel::score_items(UserIndex, std::span<const ItemIndex> seen,
                            std::vector<double>& out) const {
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(n_items_);
    for (ItemIndex j : seen) scores += weights_.row(j).transpose();
    out.resize(n_items_);
    Eigen::VectorXd::Map(out.data(), scores.size()) = scores;
}

std::unique_ptr<FittedModel> fit(const ComboSpec& combo, const TrainMatrix& train,
                                 double budget_seconds, std::uint64_t seed) {
    switch (combo.id.algorithm) {
        case Algorithm::Random:
            return std::make_unique<RandomModel>(combo, train, seed);
        case Algorithm::Popularity:
            return std::make_unique<PopularityModel>(combo, train);
        case Algorithm::ItemKNN:
            return std::make_unique<ItemKnnModel>(combo, train, budget_seconds);
        case Algorithm::UserKNN:
            return std::make_unique<UserKnnModel>(combo, train, budget_seconds);
        case Algorithm::ImplicitALS:
            return std::make_unique<AlsModel>(combo, train, budget_seconds, seed);
        case Algorithm::EASE:
            return std::make_unique<EaseModel>(combo, train, budget_seconds);
    }
    throw Error("unreachable");
}

TopKRecommendations recommend(const FittedModel& model, UserIndex user, int k,
                              std::span<const ItemIndex> seen) {
    if (!model.knows_user(user))
        throw UnknownUserError("user index " + std::to_string(user) + " not in training data");

    std::vector<double> scores;
    model.score_items(user, seen, scores);

    std::vector<std::uint8_t> seen_mask(model.n_items(), 0);
    for (ItemIndex j : seen) seen_mask[j] = 1;

    std::vector<ItemIndex> candidates;
    candidates.reserve(model.n_items());
    for (ItemIndex i = 0; i < model.n_items(); ++i)
        if (!seen_mask[i]) candidates.push_back(i);

    auto cmp = [&](ItemIndex a, ItemIndex b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), cmp);
    candidates.resize(take);

    return TopKRecommendations{user, std::move(candidates)};
}

}  // namespace recmeta
