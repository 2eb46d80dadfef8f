#include <doctest.h>

#include <set>

#include "recmeta/algorithms.hpp"
#include "recmeta/preprocess.hpp"
#include "test_util.hpp"

using namespace recmeta;

namespace {

TrainMatrix matrix_of(std::vector<Interaction> pairs, std::uint32_t n_users,
                      std::uint32_t n_items) {
    std::sort(pairs.begin(), pairs.end());
    return TrainMatrix::from_interactions(pairs, n_users, n_items);
}

ComboSpec combo_of(Algorithm a, int cfg) {
    for (const ComboSpec& c : default_zoo())
        if (c.id.algorithm == a && c.id.config_index == cfg) return c;
    FAIL("combo not in zoo");
    return {};
}

}  // namespace

TEST_CASE("default zoo has ten unique combos, singletons for Random/Popularity") {
    std::vector<ComboSpec> zoo = default_zoo();
    CHECK(zoo.size() == 10);
    std::set<std::string> names;
    int random_count = 0, popularity_count = 0;
    for (const ComboSpec& c : zoo) {
        names.insert(c.name());
        if (c.id.algorithm == Algorithm::Random) {
            ++random_count;
            CHECK(c.id.config_index == 0);
        }
        if (c.id.algorithm == Algorithm::Popularity) {
            ++popularity_count;
            CHECK(c.id.config_index == 0);
        }
    }
    CHECK(names.size() == 10);
    CHECK(random_count == 1);
    CHECK(popularity_count == 1);
}

TEST_CASE("popularity model counts training interactions per item") {
    TrainMatrix tm = matrix_of({{0, 0}, {1, 0}, {1, 1}}, 2, 2);
    auto model = fit(combo_of(Algorithm::Popularity, 0), tm, 10.0, 1);
    const auto& counts = dynamic_cast<const PopularityModel&>(*model).item_counts();
    CHECK(counts == std::vector<double>{2.0, 1.0});
}

TEST_CASE("popularity ties break by ascending item index") {
    // counts: item0 = 2, item1 = 1, item2 = 1
    TrainMatrix tm = matrix_of({{0, 0}, {1, 0}, {1, 1}, {2, 2}}, 3, 3);
    auto model = fit(combo_of(Algorithm::Popularity, 0), tm, 10.0, 1);
    std::vector<ItemIndex> seen = {0};
    TopKRecommendations recs = recommend(*model, 0, 2, seen);
    CHECK(recs.ranked_items == std::vector<ItemIndex>{1, 2});
}

TEST_CASE("random model is deterministic per seed") {
    TrainMatrix tm = matrix_of({{0, 0}, {0, 1}, {1, 2}}, 2, 8);
    auto model = fit(combo_of(Algorithm::Random, 0), tm, 10.0, 42);
    std::vector<ItemIndex> seen = {0, 1};
    TopKRecommendations a = recommend(*model, 0, 5, seen);
    TopKRecommendations b = recommend(*model, 0, 5, seen);
    CHECK(a.ranked_items == b.ranked_items);

    auto refit = fit(combo_of(Algorithm::Random, 0), tm, 10.0, 42);
    CHECK(recommend(*refit, 0, 5, seen).ranked_items == a.ranked_items);

    auto other_seed = fit(combo_of(Algorithm::Random, 0), tm, 10.0, 43);
    CHECK(recommend(*other_seed, 0, 5, seen).ranked_items != a.ranked_items);
}

TEST_CASE("item cosine: shared users give similarity 1, disjoint give 0") {
    // items 0 and 1 share users {0,1}; item 2 has user 2 only
    TrainMatrix tm = matrix_of({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}}, 3, 3);
    auto model = fit(combo_of(Algorithm::ItemKNN, 0), tm, 10.0, 1);
    const auto& knn = dynamic_cast<const ItemKnnModel&>(*model);
    CHECK(knn.similarity(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(knn.similarity(0, 2) == 0.0);
}

TEST_CASE("user knn recommends the similar user's extra item") {
    // u0 = {a,b}; u1 = {a,b,x}; u2 disjoint
    TrainMatrix tm = matrix_of({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}, {2, 3}, {2, 4}}, 3, 5);
    auto model = fit(combo_of(Algorithm::UserKNN, 0), tm, 10.0, 1);
    std::vector<ItemIndex> seen = {0, 1};
    TopKRecommendations recs = recommend(*model, 0, 1, seen);
    REQUIRE(recs.ranked_items.size() == 1);
    CHECK(recs.ranked_items[0] == 2);
}

TEST_CASE("user knn matches a dense brute-force scoring oracle") {
    Rng rng(12);
    InteractionDataset d = testutil::random_core_dataset(rng, 20, 20, 300, 3);
    TrainMatrix tm = TrainMatrix::from_interactions(d.interactions(),
                                                    static_cast<std::uint32_t>(d.n_users()),
                                                    static_cast<std::uint32_t>(d.n_items()));
    // neighbors=100 >= n_users, so every positive-similarity user counts
    auto model = fit(combo_of(Algorithm::UserKNN, 1), tm, 10.0, 1);

    // dense oracle over the binary matrix
    std::vector<std::vector<double>> binary(tm.n_users, std::vector<double>(tm.n_items, 0.0));
    for (std::uint32_t u = 0; u < tm.n_users; ++u)
        for (ItemIndex i : tm.items_of(u)) binary[u][i] = 1.0;
    for (std::uint32_t u = 0; u < tm.n_users; ++u) {
        std::vector<double> expected(tm.n_items, 0.0);
        for (std::uint32_t v = 0; v < tm.n_users; ++v) {
            if (v == u) continue;
            double dot = 0, du = 0, dv = 0;
            for (std::uint32_t i = 0; i < tm.n_items; ++i) {
                dot += binary[u][i] * binary[v][i];
                du += binary[u][i];
                dv += binary[v][i];
            }
            if (dot == 0) continue;
            double sim = dot / std::sqrt(du * dv);
            for (std::uint32_t i = 0; i < tm.n_items; ++i) expected[i] += sim * binary[v][i];
        }
        std::vector<double> actual;
        model->score_items(u, tm.items_of(u), actual);
        for (std::uint32_t i = 0; i < tm.n_items; ++i)
            CHECK(actual[i] == doctest::Approx(expected[i]).epsilon(1e-9));
    }
}

TEST_CASE("als respects a tiny budget and flags exhaustion") {
    Rng rng(3);
    InteractionDataset d = testutil::random_core_dataset(rng, 30, 30, 600, 5);
    TrainMatrix tm = TrainMatrix::from_interactions(d.interactions(),
                                                    static_cast<std::uint32_t>(d.n_users()),
                                                    static_cast<std::uint32_t>(d.n_items()));
    auto model = fit(combo_of(Algorithm::ImplicitALS, 0), tm, 1e-9, 7);
    const auto& als = dynamic_cast<const AlsModel&>(*model);
    CHECK(als.budget_exhausted());
    CHECK(als.epochs_run() <= 1);
    // still answers recommendation queries
    TopKRecommendations recs = recommend(*model, 0, 3, tm.items_of(0));
    CHECK(recs.ranked_items.size() == 3);
}

TEST_CASE("als objective is non-increasing across epochs") {
    Rng rng(21);
    for (int instance = 0; instance < 3; ++instance) {
        std::vector<Interaction> pairs;
        for (std::uint32_t u = 0; u < 50; ++u)
            for (std::uint32_t i = 0; i < 50; ++i)
                if (rng.uniform01() < 0.12) pairs.push_back({u, i});
        TrainMatrix tm = matrix_of(pairs, 50, 50);

        ComboSpec combo{{Algorithm::ImplicitALS, 0},
                        {.factors = 8, .regularization = 0.1, .epochs = 1, .alpha = 40.0}};
        double previous = std::numeric_limits<double>::infinity();
        for (int epochs = 1; epochs <= 6; ++epochs) {
            combo.params.epochs = epochs;
            auto model = fit(combo, tm, 60.0, 1000 + instance);
            const auto& als = dynamic_cast<const AlsModel&>(*model);
            REQUIRE(als.epochs_run() == epochs);
            double objective =
                als_objective(tm, als.user_factors(), als.item_factors(), 0.1, 40.0);
            CHECK(objective <= previous + 1e-9);
            previous = objective;
        }
    }
}

TEST_CASE("ease learns a zero diagonal exactly") {
    Rng rng(9);
    InteractionDataset d = testutil::random_core_dataset(rng, 25, 25, 400, 5);
    TrainMatrix tm = TrainMatrix::from_interactions(d.interactions(),
                                                    static_cast<std::uint32_t>(d.n_users()),
                                                    static_cast<std::uint32_t>(d.n_items()));
    for (int cfg : {0, 1}) {
        auto model = fit(combo_of(Algorithm::EASE, cfg), tm, 30.0, 1);
        const auto& ease = dynamic_cast<const EaseModel&>(*model);
        for (std::uint32_t j = 0; j < tm.n_items; ++j) CHECK(ease.weights()(j, j) == 0.0);
    }
}

TEST_CASE("recommend never returns seen items, lists are distinct and capped") {
    Rng rng(88);
    InteractionDataset d = testutil::random_core_dataset(rng, 25, 30, 700, 5);
    TrainMatrix tm = TrainMatrix::from_interactions(d.interactions(),
                                                    static_cast<std::uint32_t>(d.n_users()),
                                                    static_cast<std::uint32_t>(d.n_items()));
    std::vector<std::unique_ptr<FittedModel>> models;
    for (const ComboSpec& combo : default_zoo()) models.push_back(fit(combo, tm, 30.0, 5));

    int queries = 0;
    while (queries < 1000) {
        for (const auto& model : models) {
            UserIndex u = static_cast<UserIndex>(rng.below(tm.n_users));
            int k = 1 + static_cast<int>(rng.below(12));
            auto seen = tm.items_of(u);
            TopKRecommendations recs = recommend(*model, u, k, seen);
            CHECK(recs.ranked_items.size() <=
                  std::min<std::size_t>(k, tm.n_items - seen.size()));
            std::set<ItemIndex> unique(recs.ranked_items.begin(), recs.ranked_items.end());
            CHECK(unique.size() == recs.ranked_items.size());
            for (ItemIndex i : recs.ranked_items)
                CHECK_FALSE(std::binary_search(seen.begin(), seen.end(), i));
            ++queries;
        }
    }
}

TEST_CASE("fit + recommend is reproducible for every algorithm") {
    Rng rng(404);
    InteractionDataset d = testutil::random_core_dataset(rng, 20, 20, 500, 5);
    TrainMatrix tm = TrainMatrix::from_interactions(d.interactions(),
                                                    static_cast<std::uint32_t>(d.n_users()),
                                                    static_cast<std::uint32_t>(d.n_items()));
    for (const ComboSpec& combo : default_zoo()) {
        auto a = fit(combo, tm, 30.0, 77);
        auto b = fit(combo, tm, 30.0, 77);
        for (UserIndex u = 0; u < std::min<std::uint32_t>(tm.n_users, 5); ++u) {
            auto seen = tm.items_of(u);
            CHECK(recommend(*a, u, 10, seen).ranked_items ==
                  recommend(*b, u, 10, seen).ranked_items);
        }
    }
}

TEST_CASE("recommend rejects users missing from training") {
    TrainMatrix tm = matrix_of({{0, 0}, {0, 1}}, 2, 3);  // user 1 has no rows
    auto model = fit(combo_of(Algorithm::Popularity, 0), tm, 10.0, 1);
    std::vector<ItemIndex> none;
    CHECK_THROWS_AS(recommend(*model, 1, 2, none), UnknownUserError);
    CHECK_THROWS_AS(recommend(*model, 9, 2, none), UnknownUserError);
}

TEST_CASE("recommend returns all unseen items when fewer than k remain") {
    TrainMatrix tm = matrix_of({{0, 0}, {0, 1}, {1, 2}}, 2, 4);
    auto model = fit(combo_of(Algorithm::Popularity, 0), tm, 10.0, 1);
    std::vector<ItemIndex> seen = {0, 1};
    TopKRecommendations recs = recommend(*model, 0, 10, seen);
    CHECK(recs.ranked_items.size() == 2);  // items 2 and 3
}
