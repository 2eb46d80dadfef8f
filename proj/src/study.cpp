#include "recmeta/study.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>

#include <nlohmann/json.hpp>

#include "recmeta/meta_dataset.hpp"
#include "recmeta/meta_features.hpp"
#include "recmeta/preprocess.hpp"
#include "recmeta/rng.hpp"
#include "recmeta/text.hpp"
#include "recmeta/version.hpp"

namespace recmeta {

using nlohmann::json;

namespace {

const std::vector<RegressorFamily> kAllFamilies = {
    RegressorFamily::LinearRegression, RegressorFamily::KnnRegressor,
    RegressorFamily::RandomForest, RegressorFamily::GradientBoostedTrees};

CsvSchema schema_from_json(const json& j) {
    CsvSchema schema;
    schema.user_col = j.value("user_col", 0);
    schema.item_col = j.value("item_col", 1);
    if (j.contains("rating_col")) schema.rating_col = j.at("rating_col").get<int>();
    if (j.contains("timestamp_col")) schema.timestamp_col = j.at("timestamp_col").get<int>();
    std::string delim = j.value("delimiter", ",");
    if (delim == "\\t" || delim == "tab") delim = "\t";
    if (delim.size() != 1) throw ConfigError("schema: delimiter must be a single character");
    schema.delimiter = delim[0];
    schema.has_header = j.value("has_header", false);
    return schema;
}

json schema_to_json(const CsvSchema& schema) {
    json j;
    j["user_col"] = schema.user_col;
    j["item_col"] = schema.item_col;
    if (schema.rating_col) j["rating_col"] = *schema.rating_col;
    if (schema.timestamp_col) j["timestamp_col"] = *schema.timestamp_col;
    j["delimiter"] = std::string(1, schema.delimiter);
    j["has_header"] = schema.has_header;
    return j;
}

ComboSpec zoo_combo_from_json(const json& j) {
    ComboSpec combo;
    combo.id.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
    combo.id.config_index = j.value("config_index", 0);
    combo.params.neighbors = j.value("neighbors", 0);
    combo.params.factors = j.value("factors", 0);
    combo.params.regularization = j.value("regularization", 0.0);
    combo.params.epochs = j.value("epochs", 20);
    combo.params.alpha = j.value("alpha", 40.0);
    combo.params.ridge = j.value("ridge", 0.0);
    return combo;
}

std::filesystem::path prepared_dir(const StudyConfig& config) {
    return config.output_dir / "prepared";
}
std::filesystem::path meta_dir(const StudyConfig& config) { return config.output_dir / "meta"; }
std::filesystem::path select_dir(const StudyConfig& config) { return config.output_dir / "select"; }
std::filesystem::path synth_dir(const StudyConfig& config) { return config.output_dir / "synth"; }

std::uint64_t effective_seed(const StudyConfig& config, const StageOptions& options) {
    return options.seed_override.value_or(config.seed);
}

double effective_budget(const StudyConfig& config, const StageOptions& options) {
    return options.budget_override.value_or(config.fit_budget_seconds);
}

}  // namespace

const std::vector<RegressorSpec>& StudyConfig::grid_for(RegressorFamily family) const {
    for (const auto& [f, grid] : grids)
        if (f == family) return grid;
    throw ConfigError(std::string("no grid for family ") + family_name(family));
}

std::vector<ComboSpec> StudyConfig::zoo() const {
    return zoo_override ? *zoo_override : default_zoo();
}

StudyConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }

    StudyConfig config;
    try {
        if (!j.contains("seed")) throw ConfigError("config: missing required key 'seed'");
        config.seed = j.at("seed").get<std::uint64_t>();
        if (!j.contains("output_dir")) throw ConfigError("config: missing required key 'output_dir'");
        config.output_dir = j.at("output_dir").get<std::string>();
        config.core_k = j.value("core_k", 5);
        if (config.core_k < 1) throw ConfigError("config: core_k must be >= 1");
        if (j.value("n_folds", 5) != 5) throw ConfigError("config: n_folds is fixed at 5");
        if (j.contains("thresholds")) {
            std::vector<int> t = j.at("thresholds").get<std::vector<int>>();
            if (!std::equal(t.begin(), t.end(), kThresholds.begin(), kThresholds.end()))
                throw ConfigError("config: thresholds are fixed at 1,3,5,10,20");
        }
        config.fit_budget_seconds = j.value("fit_budget_seconds", 60.0);
        if (!(config.fit_budget_seconds > 0)) throw ConfigError("config: fit_budget_seconds must be > 0");

        if (j.contains("corpus")) {
            for (const json& entry : j.at("corpus")) {
                CorpusEntry ce;
                ce.name = entry.at("name").get<std::string>();
                ce.path = entry.at("path").get<std::string>();
                ce.schema = entry.contains("schema") ? schema_from_json(entry.at("schema"))
                                                     : CsvSchema{0, 1, {}, {}, ',', true};
                config.corpus.push_back(std::move(ce));
            }
            std::vector<std::string> names;
            for (const CorpusEntry& ce : config.corpus) names.push_back(ce.name);
            std::sort(names.begin(), names.end());
            if (std::adjacent_find(names.begin(), names.end()) != names.end())
                throw ConfigError("config: corpus names must be unique");
        }

        if (j.contains("learners")) {
            for (const json& name : j.at("learners"))
                config.learners.push_back(family_from_name(name.get<std::string>()));
        } else {
            config.learners = kAllFamilies;
        }
        if (j.contains("objectives")) {
            for (const json& name : j.at("objectives"))
                config.objectives.push_back(objective_from_name(name.get<std::string>()));
        } else {
            config.objectives = {Objective::PerformancePrediction, Objective::RankingPrediction};
        }

        if (j.contains("zoo")) {
            std::vector<ComboSpec> zoo;
            for (const json& entry : j.at("zoo")) zoo.push_back(zoo_combo_from_json(entry));
            if (zoo.empty()) throw ConfigError("config: zoo override must not be empty");
            config.zoo_override = std::move(zoo);
        }

        if (j.contains("grids")) {
            for (const auto& [family_name_str, entries] : j.at("grids").items()) {
                RegressorFamily family = family_from_name(family_name_str);
                std::vector<RegressorSpec> grid;
                for (const json& e : entries) {
                    json with_family = e;
                    with_family["family"] = family_name_str;
                    grid.push_back(regressor_spec_from_json(with_family.dump()));
                }
                if (grid.empty()) throw ConfigError("config: empty grid for " + family_name_str);
                config.grids.emplace_back(family, std::move(grid));
            }
        }

        // default grids for families without a configured one
        for (RegressorFamily family : kAllFamilies) {
            bool have = false;
            for (const auto& [f, grid] : config.grids) have = have || f == family;
            if (!have) config.grids.emplace_back(family, default_grid(family));
        }

        if (j.contains("synth")) {
            const json& s = j.at("synth");
            config.synth.n_datasets = s.value("n_datasets", config.synth.n_datasets);
            config.synth.rule = s.value("rule", config.synth.rule);
            if (s.contains("users")) {
                std::vector<int> range = s.at("users").get<std::vector<int>>();
                if (range.size() != 2) throw ConfigError("config: synth.users must be [min,max]");
                config.synth.users_min = range[0];
                config.synth.users_max = range[1];
            }
            config.synth.validate();
        }
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config;
}

void run_synth(const StudyConfig& config, const StageOptions& options) {
    const std::uint64_t seed = effective_seed(config, options);
    SynthCorpus corpus = generate_corpus(config.synth, seed);

    const std::filesystem::path dir = synth_dir(config);
    std::filesystem::create_directories(dir);

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["seed"] = seed;
    manifest["rule"] = config.synth.rule;
    json datasets = json::array();
    json corpus_entries = json::array();
    for (std::size_t d = 0; d < corpus.datasets.size(); ++d) {
        const NamedDataset& nd = corpus.datasets[d];
        const std::filesystem::path file = dir / (nd.name + ".csv");
        export_csv_file(nd.dataset, file);
        datasets.push_back({{"name", nd.name},
                            {"regime", corpus.info[d].regime},
                            {"expected_winner", corpus.info[d].expected_winner},
                            {"n_users", nd.dataset.n_users()},
                            {"n_items", nd.dataset.n_items()},
                            {"n_interactions", nd.dataset.n_interactions()}});
        corpus_entries.push_back({{"name", nd.name},
                                  {"path", file.string()},
                                  {"schema", schema_to_json(CsvSchema{0, 1, {}, {}, ',', true})}});
    }
    manifest["datasets"] = std::move(datasets);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    // ready-to-run study configuration pointing at the generated corpus
    json study;
    study["seed"] = seed;
    study["output_dir"] = config.output_dir.string();
    study["core_k"] = config.core_k;
    study["fit_budget_seconds"] = config.fit_budget_seconds;
    study["corpus"] = std::move(corpus_entries);
    json learners = json::array();
    for (RegressorFamily f : config.learners) learners.push_back(family_name(f));
    study["learners"] = std::move(learners);
    json objectives = json::array();
    for (Objective o : config.objectives) objectives.push_back(objective_name(o));
    study["objectives"] = std::move(objectives);
    write_file(dir / "study_config.json", study.dump(2) + "\n");

    std::cout << "synth: wrote " << corpus.datasets.size() << " datasets to " << dir.string()
              << "\n";
}

void run_prepare(const StudyConfig& config, const StageOptions& options) {
    if (config.corpus.empty()) throw ConfigError("prepare: config has an empty corpus");
    const std::uint64_t seed = effective_seed(config, options);
    const std::filesystem::path dir = prepared_dir(config);
    std::filesystem::create_directories(dir);

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["seed"] = seed;
    manifest["core_k"] = config.core_k;
    json included = json::array();
    json excluded = json::array();

    for (const CorpusEntry& entry : config.corpus) {
        InteractionDataset dataset = build_dataset(ingest_csv(entry.path, entry.schema));
        InteractionDataset pruned = k_core_prune(dataset, config.core_k);
        if (pruned.n_interactions() < 50) {
            std::cerr << "warning: dataset '" << entry.name << "' pruned to "
                      << pruned.n_interactions() << " interactions, excluded\n";
            excluded.push_back(entry.name);
            continue;
        }
        CvPlan plan = make_cv_plan(pruned, 5, derive_seed(seed, "cv", hash_str(entry.name)));

        const std::filesystem::path ddir = dir / entry.name;
        export_csv_file(pruned, ddir / "interactions.csv");
        export_cv_plan_csv_file(plan, pruned, ddir / "splits.csv");
        write_file(ddir / "meta_features.csv",
                   meta_feature_csv_header() +
                       meta_feature_csv_row(entry.name, extract_meta_features(pruned)));
        included.push_back(entry.name);
    }
    if (included.empty()) throw DatasetTooSmallError("prepare: every dataset was pruned away");
    manifest["datasets"] = std::move(included);
    manifest["excluded_datasets"] = std::move(excluded);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "prepare: " << manifest["datasets"].size() << " datasets ready, "
              << manifest["excluded_datasets"].size() << " excluded\n";
}

void run_build_meta(const StudyConfig& config, const StageOptions& options) {
    const std::filesystem::path pdir = prepared_dir(config);
    if (!std::filesystem::exists(pdir / "manifest.json"))
        throw IoError("build-meta: missing prepare outputs under " + pdir.string() +
                      " (run prepare first)");
    json manifest;
    try {
        manifest = json::parse(read_file(pdir / "manifest.json"));
    } catch (const json::exception& e) {
        throw SchemaMismatchError("prepare manifest: " + std::string(e.what()));
    }

    std::vector<NamedDataset> corpus;
    for (const json& name : manifest.at("datasets")) {
        const std::string dataset_name = name.get<std::string>();
        corpus.push_back(
            {dataset_name, load_canonical_csv(pdir / dataset_name / "interactions.csv")});
    }

    BuildOptions build;
    build.seed = effective_seed(config, options);
    build.budget_seconds = effective_budget(config, options);
    build.jobs = options.jobs;
    build.core_k = config.core_k;

    const std::vector<ComboSpec> zoo = config.zoo();
    std::cout << "build-meta: " << corpus.size() << " datasets x 5 folds x " << zoo.size()
              << " combos = " << corpus.size() * 5 * zoo.size() << " fit jobs\n";

    PerformanceTable table = build_performance_table(corpus, zoo, build);
    save_table(table, meta_dir(config));
    std::cout << "build-meta: wrote " << (meta_dir(config) / "performance.csv").string() << "\n";
}

void run_select(const StudyConfig& config, const StageOptions& options) {
    const std::filesystem::path mdir = meta_dir(config);
    if (!std::filesystem::exists(mdir / "performance.csv"))
        throw IoError("select: missing performance table under " + mdir.string() +
                      " (run build-meta first)");
    PerformanceTable table = load_table(mdir);
    if (table.datasets().size() < 3)
        throw TooFewDatasetsError("select: need at least 3 datasets, have " +
                                  std::to_string(table.datasets().size()));

    LooOptions loo;
    loo.seed = effective_seed(config, options);
    loo.jobs = options.jobs;

    std::vector<LooRecord> records;
    for (RegressorFamily family : config.learners) {
        const std::vector<RegressorSpec>& grid = config.grid_for(family);
        for (Objective objective : config.objectives) {
            std::vector<LooRecord> batch = loo_evaluate(table, family, grid, objective, loo);
            records.insert(records.end(), std::make_move_iterator(batch.begin()),
                           std::make_move_iterator(batch.end()));
        }
    }

    if (options.filter_significant) {
        std::erase_if(records, [](const LooRecord& r) { return r.p >= 0.05; });
    }

    LooReport report = aggregate(table.combos(), std::move(records));
    emit_report(report, select_dir(config), ReportFormat::Csv);
    emit_report(report, select_dir(config), ReportFormat::Json);
    std::cout << "select: wrote " << report.records.size() << " records to "
              << select_dir(config).string() << "\n";
}

void run_report(const StudyConfig& config, const StageOptions&) {
    const std::filesystem::path sdir = select_dir(config);
    if (!std::filesystem::exists(sdir / "aggregates.csv"))
        throw IoError("report: missing selection outputs under " + sdir.string() +
                      " (run select first)");
    std::vector<std::string> lines = read_lines(sdir / "aggregates.csv");
    if (lines.empty()) throw SchemaMismatchError("aggregates.csv is empty");
    std::printf("%-24s %-12s %12s %12s %12s %12s\n", "learner", "objective", "median_rho",
                "recall@1", "recall@3", "rho_delta");
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        std::vector<std::string> f = split(lines[ln], ',');
        if (f.size() != 6) throw SchemaMismatchError("aggregates.csv line " + std::to_string(ln + 1));
        std::printf("%-24s %-12s %12s %12s %12s %12s\n", f[0].c_str(), f[1].c_str(), f[2].c_str(),
                    f[3].c_str(), f[4].c_str(), f[5].c_str());
    }
}

}  // namespace recmeta
