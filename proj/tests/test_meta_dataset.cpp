#include <doctest.h>

#include <fstream>
#include <numeric>

#include "recmeta/meta_dataset.hpp"
#include "recmeta/text.hpp"
#include "test_util.hpp"

using namespace recmeta;

namespace {

InteractionDataset complete(int n_users, int n_items, const std::string& prefix) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int u = 0; u < n_users; ++u)
        for (int i = 0; i < n_items; ++i)
            pairs.emplace_back(prefix + "u" + std::to_string(u), prefix + "i" + std::to_string(i));
    return testutil::make_dataset(pairs);
}

// a dataset with one dominant item, 5-core safe
InteractionDataset skewed_dataset(Rng& rng) {
    std::vector<std::pair<std::string, std::string>> pairs;
    const int n_users = 40, n_tail = 20;
    for (int u = 0; u < n_users; ++u) {
        std::string user = "u" + std::to_string(u);
        for (int h = 0; h < 5; ++h) pairs.emplace_back(user, "head" + std::to_string(h));
        std::vector<int> tail(n_tail);
        std::iota(tail.begin(), tail.end(), 0);
        rng.shuffle(tail);
        for (int p = 0; p < 6; ++p) pairs.emplace_back(user, "tail" + std::to_string(tail[p]));
    }
    return testutil::make_dataset(pairs);
}

// fast zoo for orchestration tests
std::vector<ComboSpec> small_zoo() {
    std::vector<ComboSpec> zoo = default_zoo();
    std::erase_if(zoo, [](const ComboSpec& c) {
        return c.id.algorithm == Algorithm::ImplicitALS && c.id.config_index == 1;
    });
    return zoo;
}

PerformanceTable random_table(Rng& rng, int n_datasets, int n_combos) {
    std::vector<std::string> names;
    for (int d = 0; d < n_datasets; ++d) names.push_back("d" + std::to_string(d));
    std::vector<ComboSpec> zoo = default_zoo();
    std::vector<ComboSpec> combos(zoo.begin(), zoo.begin() + n_combos);
    PerformanceTable table(names, combos, 1, 60.0);
    for (int d = 0; d < n_datasets; ++d) {
        for (int c = 0; c < n_combos; ++c)
            for (Metric m : kAllMetrics)
                for (int k : kThresholds)
                    for (int f = 0; f < 5; ++f) table.set_score(d, c, m, k, f, rng.uniform01());
        MetaFeatureVector mf;
        mf.n_users = 10 + static_cast<double>(rng.below(100));
        mf.n_items = 10 + static_cast<double>(rng.below(100));
        mf.n_interactions = mf.n_users * 6;
        mf.density = mf.n_interactions / (mf.n_users * mf.n_items);
        mf.user_item_ratio = mf.n_users / mf.n_items;
        mf.item_user_ratio = mf.n_items / mf.n_users;
        mf.max_user_degree = 12;
        mf.min_user_degree = 5;
        mf.max_item_degree = 20;
        mf.min_item_degree = 5;
        mf.mean_user_degree = 6;
        mf.mean_item_degree = mf.n_interactions / mf.n_items;
        table.set_meta_features(d, mf);
    }
    return table;
}

}  // namespace

TEST_CASE("build fills the complete grid and is byte-stable across reruns and jobs") {
    std::vector<NamedDataset> corpus;
    corpus.push_back({"alpha", complete(8, 8, "a")});
    corpus.push_back({"beta", complete(9, 7, "b")});

    BuildOptions options;
    options.seed = 5;
    options.budget_seconds = 30.0;
    options.jobs = 1;
    std::vector<ComboSpec> zoo = small_zoo();

    PerformanceTable serial = build_performance_table(corpus, zoo, options);
    CHECK(serial.datasets().size() == 2);
    for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t c = 0; c < zoo.size(); ++c)
            for (Metric m : kAllMetrics)
                for (int k : kThresholds)
                    for (int f = 0; f < 5; ++f) {
                        double v = serial.score(d, c, m, k, f);
                        CHECK(v >= 0.0);
                        CHECK(v <= 1.0);
                    }

    options.jobs = 4;
    PerformanceTable parallel = build_performance_table(corpus, zoo, options);

    auto dir = testutil::scratch_dir("build_tables");
    save_table(serial, dir / "serial");
    save_table(parallel, dir / "parallel");
    options.jobs = 1;
    PerformanceTable again = build_performance_table(corpus, zoo, options);
    save_table(again, dir / "again");

    CHECK(read_file(dir / "serial" / "performance.csv") ==
          read_file(dir / "parallel" / "performance.csv"));
    CHECK(read_file(dir / "serial" / "performance.csv") ==
          read_file(dir / "again" / "performance.csv"));
    CHECK(read_file(dir / "serial" / "manifest.json") ==
          read_file(dir / "parallel" / "manifest.json"));
    CHECK(read_file(dir / "serial" / "meta_features.csv") ==
          read_file(dir / "parallel" / "meta_features.csv"));
}

TEST_CASE("datasets pruned below the floor are excluded, not fatal") {
    std::vector<NamedDataset> corpus;
    corpus.push_back({"big", complete(8, 8, "a")});
    corpus.push_back({"tiny", complete(3, 3, "t")});  // 9 interactions, pruned away

    BuildOptions options;
    options.seed = 2;
    options.budget_seconds = 10.0;
    PerformanceTable table = build_performance_table(corpus, small_zoo(), options);
    CHECK(table.datasets() == std::vector<std::string>{"big"});
    CHECK(table.excluded_datasets() == std::vector<std::string>{"tiny"});
}

TEST_CASE("duplicate corpus names are rejected") {
    std::vector<NamedDataset> corpus;
    corpus.push_back({"same", complete(8, 8, "a")});
    corpus.push_back({"same", complete(8, 8, "b")});
    CHECK_THROWS_AS(build_performance_table(corpus, small_zoo(), BuildOptions{}), ConfigError);
}

TEST_CASE("ground truth: fold mean, tie rule, and sort oracle") {
    Rng rng(64);
    PerformanceTable table = random_table(rng, 6, 4);

    SUBCASE("labels are the fold means") {
        double fold_values[5] = {0.1, 0.2, 0.3, 0.4, 0.5};
        for (int f = 0; f < 5; ++f) table.set_score(0, 0, Metric::NDCG, 10, f, fold_values[f]);
        GroundTruth gt = ground_truth(table);
        CHECK(gt.labels[0][0] == doctest::Approx(0.3).epsilon(1e-12));
    }

    SUBCASE("exact ties break by ascending combo id") {
        for (int f = 0; f < 5; ++f) {
            table.set_score(1, 0, Metric::NDCG, 10, f, 0.5);
            table.set_score(1, 1, Metric::NDCG, 10, f, 0.5);
            table.set_score(1, 2, Metric::NDCG, 10, f, 0.2);
            table.set_score(1, 3, Metric::NDCG, 10, f, 0.1);
        }
        GroundTruth gt = ground_truth(table);
        CHECK(gt.ranking[1] == std::vector<int>{1, 2, 3, 4});
    }

    SUBCASE("ranking equals a sort-based oracle") {
        GroundTruth gt = ground_truth(table);
        for (std::size_t d = 0; d < gt.datasets.size(); ++d) {
            const std::vector<double>& labels = gt.labels[d];
            for (std::size_t c = 0; c < labels.size(); ++c) {
                // rank = 1 + number of combos strictly better or tied-with-lower-id
                int rank = 1;
                for (std::size_t o = 0; o < labels.size(); ++o) {
                    if (labels[o] > labels[c] || (labels[o] == labels[c] && o < c)) ++rank;
                }
                CHECK(gt.ranking[d][c] == rank);
            }
        }
    }

    SUBCASE("labels are invariant to fold order") {
        GroundTruth before = ground_truth(table);
        // swap two folds' scores for every cell
        for (std::size_t d = 0; d < table.datasets().size(); ++d)
            for (std::size_t c = 0; c < table.combos().size(); ++c)
                for (Metric m : kAllMetrics)
                    for (int k : kThresholds) {
                        double s0 = table.score(d, c, m, k, 0);
                        double s4 = table.score(d, c, m, k, 4);
                        table.set_score(d, c, m, k, 0, s4);
                        table.set_score(d, c, m, k, 4, s0);
                    }
        GroundTruth after = ground_truth(table);
        for (std::size_t d = 0; d < before.datasets.size(); ++d)
            CHECK(before.labels[d] == after.labels[d]);
    }
}

TEST_CASE("save -> load -> save round-trips byte-identically") {
    Rng rng(15);
    PerformanceTable table = random_table(rng, 3, 4);
    auto dir = testutil::scratch_dir("table_roundtrip");
    save_table(table, dir / "one");
    PerformanceTable loaded = load_table(dir / "one");
    save_table(loaded, dir / "two");
    for (const char* file : {"performance.csv", "meta_features.csv", "manifest.json"})
        CHECK(read_file(dir / "one" / file) == read_file(dir / "two" / file));
}

TEST_CASE("load validates the grid") {
    Rng rng(16);
    PerformanceTable table = random_table(rng, 2, 3);
    auto dir = testutil::scratch_dir("table_validation");
    save_table(table, dir / "t");

    SUBCASE("missing row -> IncompleteGrid") {
        std::vector<std::string> lines = read_lines(dir / "t" / "performance.csv");
        std::string content;
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) content += lines[i] + "\n";
        write_file(dir / "t" / "performance.csv", content);
        CHECK_THROWS_AS(load_table(dir / "t"), IncompleteGridError);
    }
    SUBCASE("out-of-range score -> SchemaMismatch") {
        std::string content = read_file(dir / "t" / "performance.csv");
        std::size_t last_comma = content.rfind(',');
        content = content.substr(0, last_comma) + ",1.7\n";
        write_file(dir / "t" / "performance.csv", content);
        CHECK_THROWS_AS(load_table(dir / "t"), SchemaMismatchError);
    }
    SUBCASE("bad header -> SchemaMismatch") {
        std::string content = read_file(dir / "t" / "performance.csv");
        write_file(dir / "t" / "performance.csv", "a,b,c\n" + content);
        CHECK_THROWS_AS(load_table(dir / "t"), SchemaMismatchError);
    }
    SUBCASE("duplicate row -> SchemaMismatch") {
        std::vector<std::string> lines = read_lines(dir / "t" / "performance.csv");
        std::string content;
        for (const std::string& line : lines) content += line + "\n";
        content += lines[1] + "\n";
        write_file(dir / "t" / "performance.csv", content);
        CHECK_THROWS_AS(load_table(dir / "t"), SchemaMismatchError);
    }
}

TEST_CASE("popularity beats random on a popularity-skewed dataset") {
    Rng rng(23);
    std::vector<NamedDataset> corpus;
    corpus.push_back({"skewed", skewed_dataset(rng)});
    BuildOptions options;
    options.seed = 31;
    options.budget_seconds = 20.0;
    std::vector<ComboSpec> zoo = default_zoo();
    PerformanceTable table = build_performance_table(corpus, zoo, options);
    GroundTruth gt = ground_truth(table);

    double random_label = -1, popularity_label = -1, best = -1;
    for (std::size_t c = 0; c < zoo.size(); ++c) {
        if (zoo[c].id.algorithm == Algorithm::Random) random_label = gt.labels[0][c];
        if (zoo[c].id.algorithm == Algorithm::Popularity) popularity_label = gt.labels[0][c];
        best = std::max(best, gt.labels[0][c]);
    }
    CHECK(popularity_label > random_label);
    CHECK(random_label < best);
}
