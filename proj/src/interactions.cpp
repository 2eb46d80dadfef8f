#include "recmeta/interactions.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "recmeta/text.hpp"

namespace recmeta {

InteractionDataset::InteractionDataset(std::vector<Interaction> interactions,
                                       std::vector<std::string> user_tokens,
                                       std::vector<std::string> item_tokens)
    : interactions_(std::move(interactions)),
      user_tokens_(std::move(user_tokens)),
      item_tokens_(std::move(item_tokens)) {
    std::sort(interactions_.begin(), interactions_.end());
    user_ids_.reserve(user_tokens_.size());
    item_ids_.reserve(item_tokens_.size());
    for (UserIndex u = 0; u < user_tokens_.size(); ++u) user_ids_.emplace(user_tokens_[u], u);
    for (ItemIndex i = 0; i < item_tokens_.size(); ++i) item_ids_.emplace(item_tokens_[i], i);
}

std::optional<UserIndex> InteractionDataset::user_index(const std::string& token) const {
    auto it = user_ids_.find(token);
    if (it == user_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<ItemIndex> InteractionDataset::item_index(const std::string& token) const {
    auto it = item_ids_.find(token);
    if (it == item_ids_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::size_t> InteractionDataset::user_degrees() const {
    std::vector<std::size_t> deg(n_users(), 0);
    for (const auto& [u, i] : interactions_) deg[u]++;
    return deg;
}

std::vector<std::size_t> InteractionDataset::item_degrees() const {
    std::vector<std::size_t> deg(n_items(), 0);
    for (const auto& [u, i] : interactions_) deg[i]++;
    return deg;
}

bool InteractionDataset::same_content(const InteractionDataset& other) const {
    if (n_interactions() != other.n_interactions()) return false;
    std::set<std::pair<std::string, std::string>> a, b;
    for (const auto& [u, i] : interactions_) a.emplace(user_token(u), item_token(i));
    for (const auto& [u, i] : other.interactions()) b.emplace(other.user_token(u), other.item_token(i));
    return a == b;
}

std::vector<RawInteraction> ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::vector<std::string> lines = read_lines(path);
    std::size_t first = 0;
    if (schema.has_header && !lines.empty()) first = 1;
    if (lines.size() <= first) throw EmptyFileError("no data rows in " + path.string());

    int max_col = std::max(schema.user_col, schema.item_col);
    if (schema.rating_col) max_col = std::max(max_col, *schema.rating_col);
    if (schema.timestamp_col) max_col = std::max(max_col, *schema.timestamp_col);

    std::vector<RawInteraction> rows;
    rows.reserve(lines.size() - first);
    for (std::size_t ln = first; ln < lines.size(); ++ln) {
        std::vector<std::string> fields = split(lines[ln], schema.delimiter);
        auto field = [&](int col) -> const std::string& {
            if (col >= static_cast<int>(fields.size()) || fields[col].empty())
                throw MissingColumnError("line " + std::to_string(ln + 1) + ": missing column " +
                                         std::to_string(col) + " in " + path.string());
            return fields[col];
        };
        RawInteraction row;
        row.user = field(schema.user_col);
        row.item = field(schema.item_col);
        if (schema.rating_col) {
            const std::string& s = field(*schema.rating_col);
            auto v = parse_double(s);
            if (!v)
                throw recmeta::ParseError("line " + std::to_string(ln + 1) +
                                          ": non-numeric rating '" + s + "'");
            row.rating = *v;
        }
        if (schema.timestamp_col) {
            const std::string& s = field(*schema.timestamp_col);
            auto v = parse_int(s);
            if (!v)
                throw recmeta::ParseError("line " + std::to_string(ln + 1) +
                                          ": non-integer timestamp '" + s + "'");
            row.timestamp = *v;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

InteractionDataset build_dataset(const std::vector<RawInteraction>& rows) {
    if (rows.empty()) throw EmptyInputError("build_dataset: no rows");

    std::unordered_map<std::string, UserIndex> user_ids;
    std::unordered_map<std::string, ItemIndex> item_ids;
    std::vector<std::string> user_tokens, item_tokens;
    std::vector<Interaction> pairs;
    pairs.reserve(rows.size());
    for (const RawInteraction& row : rows) {
        auto [uit, unew] = user_ids.try_emplace(row.user, static_cast<UserIndex>(user_tokens.size()));
        if (unew) user_tokens.push_back(row.user);
        auto [iit, inew] = item_ids.try_emplace(row.item, static_cast<ItemIndex>(item_tokens.size()));
        if (inew) item_tokens.push_back(row.item);
        pairs.emplace_back(uit->second, iit->second);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return InteractionDataset(std::move(pairs), std::move(user_tokens), std::move(item_tokens));
}

std::string export_csv(const InteractionDataset& dataset) {
    std::string out = "user,item\n";
    for (const auto& [u, i] : dataset.interactions()) {
        out += dataset.user_token(u);
        out += ',';
        out += dataset.item_token(i);
        out += '\n';
    }
    return out;
}

void export_csv_file(const InteractionDataset& dataset, const std::filesystem::path& path) {
    write_file(path, export_csv(dataset));
}

InteractionDataset load_canonical_csv(const std::filesystem::path& path) {
    CsvSchema schema;
    schema.user_col = 0;
    schema.item_col = 1;
    schema.delimiter = ',';
    schema.has_header = true;
    return build_dataset(ingest_csv(path, schema));
}

}  // namespace recmeta
