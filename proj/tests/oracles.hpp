#pragma once

// Independent reference implementations used to check the library. These are
// deliberately written as direct evaluations of the definitions (explicit
// enumerations, no shared code with the implementations under test).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "recmeta/interactions.hpp"
#include "recmeta/rng.hpp"

namespace oracles {

// ---- ranking metrics: direct formula evaluation ---------------------------

inline bool contains(const std::vector<std::uint32_t>& set, std::uint32_t item) {
    return std::find(set.begin(), set.end(), item) != set.end();
}

inline double ndcg_ref(const std::vector<std::uint32_t>& ranked,
                       const std::vector<std::uint32_t>& relevant, int k) {
    double dcg = 0.0;
    for (int pos = 1; pos <= k && pos <= static_cast<int>(ranked.size()); ++pos)
        if (contains(relevant, ranked[pos - 1])) dcg += 1.0 / std::log2(pos + 1.0);
    double idcg = 0.0;
    for (int pos = 1; pos <= k && pos <= static_cast<int>(relevant.size()); ++pos)
        idcg += 1.0 / std::log2(pos + 1.0);
    return dcg / idcg;
}

inline double recall_ref(const std::vector<std::uint32_t>& ranked,
                         const std::vector<std::uint32_t>& relevant, int k) {
    int hits = 0;
    for (int pos = 1; pos <= k && pos <= static_cast<int>(ranked.size()); ++pos)
        if (contains(relevant, ranked[pos - 1])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

inline double hitrate_ref(const std::vector<std::uint32_t>& ranked,
                          const std::vector<std::uint32_t>& relevant, int k) {
    for (int pos = 1; pos <= k && pos <= static_cast<int>(ranked.size()); ++pos)
        if (contains(relevant, ranked[pos - 1])) return 1.0;
    return 0.0;
}

// ---- spearman: average ranks (ascending) + textbook pearson ---------------

inline std::vector<double> rank_ref(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        int below = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++below;
            if (v[j] == v[i]) ++equal;
        }
        ranks[i] = below + 0.5 * (equal - 1) + 1.0;
    }
    return ranks;
}

inline double spearman_ref(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> ra = rank_ref(a), rb = rank_ref(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0 || db == 0) return 0.0;
    return num / std::sqrt(da * db);
}

// ---- k-core: one-offender-at-a-time random removal -------------------------

inline std::set<std::pair<std::string, std::string>> kcore_removal_oracle(
    const recmeta::InteractionDataset& d, int k, recmeta::Rng& rng) {
    std::set<std::pair<std::string, std::string>> edges;
    for (const auto& [u, i] : d.interactions()) edges.emplace(d.user_token(u), d.item_token(i));
    while (true) {
        std::map<std::string, int> udeg, ideg;
        for (const auto& [u, i] : edges) {
            udeg[u]++;
            ideg[i]++;
        }
        std::vector<std::pair<bool, std::string>> offending;
        for (const auto& [u, deg] : udeg)
            if (deg < k) offending.emplace_back(false, u);
        for (const auto& [i, deg] : ideg)
            if (deg < k) offending.emplace_back(true, i);
        if (offending.empty()) return edges;
        const auto& [is_item, token] = offending[rng.below(offending.size())];
        std::erase_if(edges, [&](const auto& e) {
            return is_item ? e.second == token : e.first == token;
        });
    }
}

// ---- CART root split: exhaustive enumeration -------------------------------

struct SplitChoice {
    int feature = -1;
    std::set<std::uint32_t> left;  // row ids routed left
};

// Enumerates every (feature, threshold-between-distinct-values) partition and
// scores it by the summed squared deviation from each side's mean, computed
// by direct two-pass loops.
inline SplitChoice cart_split_oracle(const std::vector<std::vector<double>>& X,
                                     const std::vector<double>& y) {
    const std::size_t n = X.size();
    const std::size_t d = X[0].size();
    SplitChoice best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < d; ++f) {
        std::vector<std::uint32_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (X[a][f] != X[b][f]) return X[a][f] < X[b][f];
            return a < b;
        });
        for (std::size_t p = 0; p + 1 < n; ++p) {
            if (X[order[p]][f] == X[order[p + 1]][f]) continue;
            double threshold = 0.5 * (X[order[p]][f] + X[order[p + 1]][f]);
            std::vector<std::uint32_t> left, right;
            for (std::size_t i = 0; i < n; ++i)
                (X[i][f] < threshold ? left : right).push_back(static_cast<std::uint32_t>(i));
            auto sse = [&](const std::vector<std::uint32_t>& side) {
                double mean = 0.0;
                for (std::uint32_t i : side) mean += y[i];
                mean /= static_cast<double>(side.size());
                double out = 0.0;
                for (std::uint32_t i : side) out += (y[i] - mean) * (y[i] - mean);
                return out;
            };
            double total = sse(left) + sse(right);
            if (total < best_sse) {
                best_sse = total;
                best.feature = static_cast<int>(f);
                best.left = std::set<std::uint32_t>(left.begin(), left.end());
            }
        }
    }
    return best;
}

}  // namespace oracles
