#include "recmeta/synth.hpp"

#include <algorithm>
#include <cmath>

#include "recmeta/rng.hpp"

namespace recmeta {

void SynthParams::validate() const {
    if (n_datasets < 3) throw ConfigError("synth: n_datasets must be >= 3");
    if (rule != "density_split") throw ConfigError("synth: unknown rule: " + rule);
    if (users_min < 20 || users_max < users_min)
        throw ConfigError("synth: invalid users range");
}

namespace {

std::string user_token(int u) { return "u" + std::to_string(u); }
std::string item_token(int i) { return "i" + std::to_string(i); }

// i.i.d. draws from a long-tailed item popularity; no user-item structure, so
// global popularity is the best possible ranking
std::vector<RawInteraction> gen_skewed(Rng& rng, int n_users) {
    const int n_items = static_cast<int>(rng.range(200, 280));
    const double skew = rng.uniform(0.6, 0.8);

    std::vector<double> cumulative(n_items);
    double total = 0.0;
    for (int i = 0; i < n_items; ++i) {
        total += std::pow(static_cast<double>(i + 1), -skew);
        cumulative[i] = total;
    }

    std::vector<RawInteraction> rows;
    std::vector<char> picked(n_items, 0);
    for (int u = 0; u < n_users; ++u) {
        const int degree = static_cast<int>(rng.range(10, 14));
        std::fill(picked.begin(), picked.end(), 0);
        int have = 0;
        int attempts = 0;
        while (have < degree && attempts < 200 * degree) {
            ++attempts;
            double x = rng.uniform01() * total;
            int item = static_cast<int>(
                std::lower_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin());
            if (item >= n_items) item = n_items - 1;
            if (picked[item]) continue;
            picked[item] = 1;
            rows.push_back({user_token(u), item_token(item), {}, {}});
            ++have;
        }
    }
    return rows;
}

// each user's taste is an arc on an item ring with triangularly decaying
// affinity, modulated by per-item weights; item neighborhoods are wide and
// graded, so models that aggregate the full neighborhood beat truncated ones
std::vector<RawInteraction> gen_structured(Rng& rng, int n_users) {
    const int n_items = static_cast<int>(rng.range(105, 130));
    const int reach = static_cast<int>(rng.range(24, 30));

    std::vector<double> item_weight(n_items);
    for (int i = 0; i < n_items; ++i) item_weight[i] = rng.uniform(0.3, 1.7);

    std::vector<RawInteraction> rows;
    for (int u = 0; u < n_users; ++u) {
        const int center = static_cast<int>(rng.below(n_items));
        std::vector<int> chosen;
        for (int t = -reach; t <= reach; ++t) {
            const int item = ((center + t) % n_items + n_items) % n_items;
            const double affinity = 1.0 - static_cast<double>(std::abs(t)) / reach;
            if (rng.uniform01() < 0.9 * affinity * item_weight[item]) chosen.push_back(item);
        }
        // sprinkle of off-arc noise
        std::vector<char> mask(n_items, 0);
        for (int item : chosen) mask[item] = 1;
        for (int& item : chosen) {
            if (rng.uniform01() >= 0.03) continue;
            int replacement = static_cast<int>(rng.below(n_items));
            if (mask[replacement]) continue;
            mask[item] = 0;
            mask[replacement] = 1;
            item = replacement;
        }
        for (int item : chosen) rows.push_back({user_token(u), item_token(item), {}, {}});
    }
    return rows;
}

}  // namespace

SynthCorpus generate_corpus(const SynthParams& params, std::uint64_t seed) {
    params.validate();
    SynthCorpus corpus;
    for (int d = 0; d < params.n_datasets; ++d) {
        Rng rng(derive_seed(seed, "synth-dataset", static_cast<std::uint64_t>(d)));
        const bool structured = (d % 2 == 1);
        const int n_users = static_cast<int>(rng.range(params.users_min, params.users_max));
        std::vector<RawInteraction> rows = structured ? gen_structured(rng, n_users)
                                                      : gen_skewed(rng, n_users);
        char name[32];
        std::snprintf(name, sizeof(name), "synth_%03d", d);
        corpus.datasets.push_back({name, build_dataset(rows)});
        corpus.info.push_back({name, structured ? "structured" : "skewed",
                               structured ? "ItemKNN.1" : "Popularity.0"});
    }
    return corpus;
}

}  // namespace recmeta
