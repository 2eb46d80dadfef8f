#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recmeta/errors.hpp"

namespace recmeta {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;
using Interaction = std::pair<UserIndex, ItemIndex>;

// One row of a source file before implicitization. Ratings and timestamps are
// carried through ingestion and dropped when the dataset is built.
struct RawInteraction {
    std::string user;
    std::string item;
    std::optional<double> rating;
    std::optional<std::int64_t> timestamp;
};

struct CsvSchema {
    int user_col = 0;
    int item_col = 1;
    std::optional<int> rating_col;
    std::optional<int> timestamp_col;
    char delimiter = ',';
    bool has_header = false;
};

// Deduplicated implicit-feedback dataset over contiguous indices. Immutable
// after construction; the interaction list is kept sorted by (user, item).
class InteractionDataset {
public:
    InteractionDataset() = default;
    InteractionDataset(std::vector<Interaction> interactions, std::vector<std::string> user_tokens,
                       std::vector<std::string> item_tokens);

    std::size_t n_users() const { return user_tokens_.size(); }
    std::size_t n_items() const { return item_tokens_.size(); }
    std::size_t n_interactions() const { return interactions_.size(); }
    bool empty() const { return interactions_.empty(); }

    // Sorted by (user, item), no duplicates.
    const std::vector<Interaction>& interactions() const { return interactions_; }

    const std::string& user_token(UserIndex u) const { return user_tokens_[u]; }
    const std::string& item_token(ItemIndex i) const { return item_tokens_[i]; }
    const std::vector<std::string>& user_tokens() const { return user_tokens_; }
    const std::vector<std::string>& item_tokens() const { return item_tokens_; }

    std::optional<UserIndex> user_index(const std::string& token) const;
    std::optional<ItemIndex> item_index(const std::string& token) const;

    std::vector<std::size_t> user_degrees() const;
    std::vector<std::size_t> item_degrees() const;

    // Same interaction content in terms of original tokens, ignoring index
    // assignment.
    bool same_content(const InteractionDataset& other) const;

private:
    std::vector<Interaction> interactions_;
    std::vector<std::string> user_tokens_;
    std::vector<std::string> item_tokens_;
    std::unordered_map<std::string, UserIndex> user_ids_;
    std::unordered_map<std::string, ItemIndex> item_ids_;
};

// Reads the declared columns from a delimited text file, in file order.
// Throws EmptyFileError, MissingColumnError or ParseError.
std::vector<RawInteraction> ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Collapses duplicate (user, item) pairs, drops ratings/timestamps and
// assigns contiguous indices in first-appearance order. Throws EmptyInputError.
InteractionDataset build_dataset(const std::vector<RawInteraction>& rows);

// Canonical export: header "user,item", one interaction per line using
// original tokens, ordered by (user_index, item_index).
std::string export_csv(const InteractionDataset& dataset);
void export_csv_file(const InteractionDataset& dataset, const std::filesystem::path& path);

// Ingest a canonical export (or any user,item file) and build the dataset.
InteractionDataset load_canonical_csv(const std::filesystem::path& path);

}  // namespace recmeta
