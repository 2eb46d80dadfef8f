#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "recmeta/meta_dataset.hpp"
#include "recmeta/study.hpp"
#include "recmeta/text.hpp"
#include "test_util.hpp"

using namespace recmeta;

namespace {

std::filesystem::path write_config(const std::filesystem::path& dir, const nlohmann::json& extra) {
    nlohmann::json j;
    j["seed"] = 77;
    j["output_dir"] = (dir / "out").string();
    for (const auto& [key, value] : extra.items()) j[key] = value;
    return testutil::write_temp(dir, "config.json", j.dump(2));
}

// small skewed dataset written as a csv corpus file
std::filesystem::path write_corpus_file(const std::filesystem::path& dir, const std::string& name,
                                        std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int u = 0; u < 30; ++u) {
        std::string user = "u" + std::to_string(u);
        for (int h = 0; h < 4; ++h) pairs.emplace_back(user, "head" + std::to_string(h));
        std::vector<int> tail(15);
        std::iota(tail.begin(), tail.end(), 0);
        rng.shuffle(tail);
        for (int p = 0; p < 5; ++p) pairs.emplace_back(user, "tail" + std::to_string(tail[p]));
    }
    auto path = dir / (name + ".csv");
    export_csv_file(testutil::make_dataset(pairs), path);
    return path;
}

}  // namespace

TEST_CASE("config validation") {
    auto dir = testutil::scratch_dir("config");

    SUBCASE("missing seed") {
        auto path = testutil::write_temp(dir, "bad.json", R"({"output_dir": "x"})");
        CHECK_THROWS_AS(load_config(path), ConfigError);
    }
    SUBCASE("malformed json") {
        auto path = testutil::write_temp(dir, "bad2.json", "{nope");
        CHECK_THROWS_AS(load_config(path), ConfigError);
    }
    SUBCASE("fixed n_folds and thresholds") {
        auto p1 = write_config(dir, {{"n_folds", 3}});
        CHECK_THROWS_AS(load_config(p1), ConfigError);
        auto p2 = write_config(dir, {{"thresholds", {1, 2, 3}}});
        CHECK_THROWS_AS(load_config(p2), ConfigError);
        auto p3 = write_config(dir, {{"thresholds", {1, 3, 5, 10, 20}}});
        CHECK(load_config(p3).core_k == 5);
    }
    SUBCASE("duplicate corpus names") {
        nlohmann::json corpus = nlohmann::json::array();
        corpus.push_back({{"name", "a"}, {"path", "a.csv"}});
        corpus.push_back({{"name", "a"}, {"path", "b.csv"}});
        CHECK_THROWS_AS(load_config(write_config(dir, {{"corpus", corpus}})), ConfigError);
    }
    SUBCASE("defaults") {
        StudyConfig config = load_config(write_config(dir, nlohmann::json::object()));
        CHECK(config.seed == 77);
        CHECK(config.core_k == 5);
        CHECK(config.fit_budget_seconds == 60.0);
        CHECK(config.learners.size() == 4);
        CHECK(config.objectives.size() == 2);
        CHECK(config.grid_for(RegressorFamily::RandomForest).size() == 12);
        CHECK(config.zoo().size() == 10);
    }
    SUBCASE("synth validation") {
        CHECK_THROWS_AS(load_config(write_config(dir, {{"synth", {{"n_datasets", 2}}}})),
                        ConfigError);
        CHECK_THROWS_AS(load_config(write_config(dir, {{"synth", {{"rule", "nope"}}}})),
                        ConfigError);
        CHECK_THROWS_AS(load_config(write_config(dir, {{"synth", {{"users", {50, 10}}}}})),
                        ConfigError);
    }
    SUBCASE("grid override") {
        nlohmann::json grids;
        grids["KnnRegressor"] = nlohmann::json::array();
        grids["KnnRegressor"].push_back({{"neighbors", 2}, {"weighting", "uniform"}});
        StudyConfig config = load_config(write_config(dir, {{"grids", grids}}));
        CHECK(config.grid_for(RegressorFamily::KnnRegressor).size() == 1);
        CHECK(config.grid_for(RegressorFamily::KnnRegressor)[0].neighbors == 2);
        CHECK(config.grid_for(RegressorFamily::GradientBoostedTrees).size() == 16);
    }
}

TEST_CASE("synth generation is deterministic and dataset profiles differ") {
    SynthParams params;
    params.n_datasets = 6;
    SynthCorpus a = generate_corpus(params, 42);
    SynthCorpus b = generate_corpus(params, 42);
    REQUIRE(a.datasets.size() == 6);
    for (std::size_t d = 0; d < 6; ++d) {
        CHECK(a.datasets[d].name == b.datasets[d].name);
        CHECK(export_csv(a.datasets[d].dataset) == export_csv(b.datasets[d].dataset));
    }
    SynthCorpus c = generate_corpus(params, 43);
    CHECK(export_csv(a.datasets[0].dataset) != export_csv(c.datasets[0].dataset));

    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> profiles;
    for (const NamedDataset& nd : a.datasets)
        profiles.insert({nd.dataset.n_users(), nd.dataset.n_items(), nd.dataset.n_interactions()});
    CHECK(profiles.size() == 6);
    for (const SynthDatasetInfo& info : a.info)
        CHECK((info.regime == "skewed" || info.regime == "structured"));
}

TEST_CASE("prepare writes three files per dataset and excludes thin ones") {
    auto dir = testutil::scratch_dir("prepare");
    auto good = write_corpus_file(dir, "good", 1);
    // too small to survive: 4 users x 4 items
    std::vector<std::pair<std::string, std::string>> tiny_pairs;
    for (int u = 0; u < 4; ++u)
        for (int i = 0; i < 4; ++i)
            tiny_pairs.emplace_back("u" + std::to_string(u), "i" + std::to_string(i));
    auto tiny = dir / "tiny.csv";
    export_csv_file(testutil::make_dataset(tiny_pairs), tiny);

    nlohmann::json corpus = nlohmann::json::array();
    corpus.push_back({{"name", "good"}, {"path", good.string()}});
    corpus.push_back({{"name", "tiny"}, {"path", tiny.string()}});
    StudyConfig config = load_config(write_config(dir, {{"corpus", corpus}}));

    run_prepare(config, StageOptions{});
    auto prepared = config.output_dir / "prepared";
    CHECK(std::filesystem::exists(prepared / "good" / "interactions.csv"));
    CHECK(std::filesystem::exists(prepared / "good" / "splits.csv"));
    CHECK(std::filesystem::exists(prepared / "good" / "meta_features.csv"));
    CHECK_FALSE(std::filesystem::exists(prepared / "tiny"));

    nlohmann::json manifest = nlohmann::json::parse(read_file(prepared / "manifest.json"));
    CHECK(manifest.at("datasets") == nlohmann::json::array({"good"}));
    CHECK(manifest.at("excluded_datasets") == nlohmann::json::array({"tiny"}));

    SUBCASE("rerun is byte-identical") {
        std::string interactions = read_file(prepared / "good" / "interactions.csv");
        std::string splits = read_file(prepared / "good" / "splits.csv");
        run_prepare(config, StageOptions{});
        CHECK(read_file(prepared / "good" / "interactions.csv") == interactions);
        CHECK(read_file(prepared / "good" / "splits.csv") == splits);
    }
}

TEST_CASE("build-meta requires prepare outputs") {
    auto dir = testutil::scratch_dir("bm_missing");
    StudyConfig config = load_config(write_config(dir, nlohmann::json::object()));
    CHECK_THROWS_AS(run_build_meta(config, StageOptions{}), IoError);
}

TEST_CASE("select requires the performance table") {
    auto dir = testutil::scratch_dir("sel_missing");
    StudyConfig config = load_config(write_config(dir, nlohmann::json::object()));
    CHECK_THROWS_AS(run_select(config, StageOptions{}), IoError);
}

TEST_CASE("mini study end to end with a reduced zoo and learners") {
    auto dir = testutil::scratch_dir("mini_study");
    nlohmann::json corpus = nlohmann::json::array();
    for (int d = 0; d < 4; ++d) {
        std::string name = "ds" + std::to_string(d);
        corpus.push_back({{"name", name}, {"path", write_corpus_file(dir, name, 100 + d).string()}});
    }
    nlohmann::json zoo = nlohmann::json::array();
    zoo.push_back({{"algorithm", "Random"}, {"config_index", 0}});
    zoo.push_back({{"algorithm", "Popularity"}, {"config_index", 0}});
    zoo.push_back({{"algorithm", "ItemKNN"}, {"config_index", 0}, {"neighbors", 20}});
    zoo.push_back({{"algorithm", "EASE"}, {"config_index", 0}, {"ridge", 10.0}});
    nlohmann::json grids;
    grids["LinearRegression"] = nlohmann::json::array();
    grids["LinearRegression"].push_back({{"ridge", 1e-8}});
    grids["KnnRegressor"] = nlohmann::json::array();
    grids["KnnRegressor"].push_back({{"neighbors", 1}});

    StudyConfig config = load_config(write_config(
        dir, {{"corpus", corpus},
              {"zoo", zoo},
              {"grids", grids},
              {"fit_budget_seconds", 20.0},
              {"learners", {"LinearRegression", "KnnRegressor"}}}));

    StageOptions options;
    options.jobs = 2;
    run_prepare(config, options);
    run_build_meta(config, options);
    run_select(config, options);

    PerformanceTable table = load_table(config.output_dir / "meta");
    CHECK(table.datasets().size() == 4);
    CHECK(table.combos().size() == 4);

    std::vector<std::string> records = read_lines(config.output_dir / "select" / "records.csv");
    // 4 datasets x 2 learners x 2 objectives + header
    CHECK(records.size() == 1 + 4 * 2 * 2);
    std::vector<std::string> aggregates =
        read_lines(config.output_dir / "select" / "aggregates.csv");
    CHECK(aggregates.size() == 1 + 2 * 2);

    SUBCASE("stage reruns and different job counts are byte-identical") {
        std::string perf = read_file(config.output_dir / "meta" / "performance.csv");
        std::string recs = read_file(config.output_dir / "select" / "records.csv");
        std::string json_report = read_file(config.output_dir / "select" / "report.json");
        options.jobs = 1;
        run_build_meta(config, options);
        run_select(config, options);
        CHECK(read_file(config.output_dir / "meta" / "performance.csv") == perf);
        CHECK(read_file(config.output_dir / "select" / "records.csv") == recs);
        CHECK(read_file(config.output_dir / "select" / "report.json") == json_report);
    }

    SUBCASE("report prints the aggregate table") {
        run_report(config, options);  // smoke: throws on malformed outputs
    }
}

TEST_CASE("synth stage writes corpus files plus manifest and study config") {
    auto dir = testutil::scratch_dir("synth_stage");
    StudyConfig config = load_config(
        write_config(dir, {{"synth", {{"n_datasets", 4}, {"users", {60, 90}}}}}));
    run_synth(config, StageOptions{});

    auto sdir = config.output_dir / "synth";
    nlohmann::json manifest = nlohmann::json::parse(read_file(sdir / "manifest.json"));
    CHECK(manifest.at("datasets").size() == 4);
    for (const auto& entry : manifest.at("datasets"))
        CHECK(std::filesystem::exists(sdir / (entry.at("name").get<std::string>() + ".csv")));

    StudyConfig generated = load_config(sdir / "study_config.json");
    CHECK(generated.corpus.size() == 4);
    CHECK(generated.seed == config.seed);

    // same seed regenerates identical files
    std::string first = read_file(sdir / "synth_000.csv");
    run_synth(config, StageOptions{});
    CHECK(read_file(sdir / "synth_000.csv") == first);
}
