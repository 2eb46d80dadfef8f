#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recmeta/meta_dataset.hpp"

namespace recmeta {

// Synthetic corpus generation. Datasets alternate between two regimes whose
// winning recommender is governed by a planted meta-feature rule:
//
//   density_split: even datasets are popularity-skewed i.i.d. samples with a
//   long item tail (low density after pruning; Popularity wins), odd datasets
//   draw each user's items from a contiguous window on an item ring (high
//   density; the item-item models win, with EASE.0 on top).
struct SynthParams {
    int n_datasets = 24;
    std::string rule = "density_split";
    int users_min = 140;
    int users_max = 220;

    void validate() const;  // throws ConfigError on bad ranges
};

struct SynthDatasetInfo {
    std::string name;
    std::string regime;           // "skewed" or "structured"
    std::string expected_winner;  // combo name the planted rule predicts
};

struct SynthCorpus {
    std::vector<NamedDataset> datasets;
    std::vector<SynthDatasetInfo> info;
};

SynthCorpus generate_corpus(const SynthParams& params, std::uint64_t seed);

}  // namespace recmeta
