#include "recmeta/preprocess.hpp"

#include <algorithm>
#include <queue>

#include "recmeta/rng.hpp"
#include "recmeta/text.hpp"

namespace recmeta {

InteractionDataset k_core_prune(const InteractionDataset& dataset, int k) {
    const auto threshold = static_cast<std::size_t>(k);
    std::vector<std::size_t> user_deg = dataset.user_degrees();
    std::vector<std::size_t> item_deg = dataset.item_degrees();
    std::vector<char> user_dead(dataset.n_users(), 0);
    std::vector<char> item_dead(dataset.n_items(), 0);

    // adjacency, needed to propagate removals
    std::vector<std::vector<ItemIndex>> user_items(dataset.n_users());
    std::vector<std::vector<UserIndex>> item_users(dataset.n_items());
    for (const auto& [u, i] : dataset.interactions()) {
        user_items[u].push_back(i);
        item_users[i].push_back(u);
    }

    // queue of (is_item, index) pending removal
    std::queue<std::pair<bool, std::uint32_t>> pending;
    for (UserIndex u = 0; u < dataset.n_users(); ++u)
        if (user_deg[u] < threshold) {
            user_dead[u] = 1;
            pending.emplace(false, u);
        }
    for (ItemIndex i = 0; i < dataset.n_items(); ++i)
        if (item_deg[i] < threshold) {
            item_dead[i] = 1;
            pending.emplace(true, i);
        }

    while (!pending.empty()) {
        auto [is_item, idx] = pending.front();
        pending.pop();
        if (is_item) {
            for (UserIndex u : item_users[idx]) {
                if (user_dead[u]) continue;
                if (--user_deg[u] < threshold) {
                    user_dead[u] = 1;
                    pending.emplace(false, u);
                }
            }
        } else {
            for (ItemIndex i : user_items[idx]) {
                if (item_dead[i]) continue;
                if (--item_deg[i] < threshold) {
                    item_dead[i] = 1;
                    pending.emplace(true, i);
                }
            }
        }
    }

    // Re-compact: users keep their relative order; items are renumbered by
    // first appearance in the (user, item)-sorted surviving list, which makes
    // export + rebuild an exact round trip.
    std::vector<UserIndex> user_map(dataset.n_users(), 0);
    UserIndex next_user = 0;
    for (UserIndex u = 0; u < dataset.n_users(); ++u)
        if (!user_dead[u]) user_map[u] = next_user++;

    constexpr ItemIndex kUnassigned = ~ItemIndex{0};
    std::vector<ItemIndex> item_map(dataset.n_items(), kUnassigned);
    ItemIndex next_item = 0;
    std::vector<Interaction> survivors;
    for (const auto& [u, i] : dataset.interactions()) {
        if (user_dead[u] || item_dead[i]) continue;
        if (item_map[i] == kUnassigned) item_map[i] = next_item++;
        survivors.emplace_back(user_map[u], item_map[i]);
    }

    std::vector<std::string> user_tokens(next_user), item_tokens(next_item);
    for (UserIndex u = 0; u < dataset.n_users(); ++u)
        if (!user_dead[u]) user_tokens[user_map[u]] = dataset.user_token(u);
    for (ItemIndex i = 0; i < dataset.n_items(); ++i)
        if (item_map[i] != kUnassigned) item_tokens[item_map[i]] = dataset.item_token(i);

    return InteractionDataset(std::move(survivors), std::move(user_tokens), std::move(item_tokens));
}

CvPlan make_cv_plan(const InteractionDataset& dataset, int n_folds, std::uint64_t seed) {
    CvPlan plan;
    plan.seed = seed;
    plan.folds.resize(n_folds);
    for (int f = 0; f < n_folds; ++f) plan.folds[f].fold_index = f;

    // group interactions per user; interactions() is sorted, so items arrive
    // in ascending order regardless of how the dataset was produced
    std::vector<std::vector<ItemIndex>> user_items(dataset.n_users());
    for (const auto& [u, i] : dataset.interactions()) user_items[u].push_back(i);

    for (UserIndex u = 0; u < dataset.n_users(); ++u) {
        std::vector<ItemIndex>& items = user_items[u];
        if (items.size() < static_cast<std::size_t>(n_folds))
            throw InsufficientInteractionsError("user " + dataset.user_token(u) + " has " +
                                                std::to_string(items.size()) + " interactions, needs >= " +
                                                std::to_string(n_folds));
        Rng rng(derive_seed(seed, "cv-user", u));
        rng.shuffle(items);
        for (std::size_t pos = 0; pos < items.size(); ++pos) {
            int test_fold = static_cast<int>(pos % static_cast<std::size_t>(n_folds));
            for (int f = 0; f < n_folds; ++f) {
                auto& side = (f == test_fold) ? plan.folds[f].test : plan.folds[f].train;
                side.emplace_back(u, items[pos]);
            }
        }
    }

    for (FoldSplit& fold : plan.folds) {
        std::sort(fold.train.begin(), fold.train.end());
        std::sort(fold.test.begin(), fold.test.end());
    }
    return plan;
}

std::string export_cv_plan_csv(const CvPlan& plan, const InteractionDataset& dataset) {
    std::string out = "fold,user,item,role\n";
    for (const FoldSplit& fold : plan.folds) {
        std::string prefix = std::to_string(fold.fold_index) + ",";
        for (const auto& [u, i] : fold.train)
            out += prefix + dataset.user_token(u) + "," + dataset.item_token(i) + ",train\n";
        for (const auto& [u, i] : fold.test)
            out += prefix + dataset.user_token(u) + "," + dataset.item_token(i) + ",test\n";
    }
    return out;
}

void export_cv_plan_csv_file(const CvPlan& plan, const InteractionDataset& dataset,
                             const std::filesystem::path& path) {
    write_file(path, export_cv_plan_csv(plan, dataset));
}

}  // namespace recmeta
