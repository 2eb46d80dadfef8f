#include "recmeta/meta_dataset.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "recmeta/preprocess.hpp"
#include "recmeta/rng.hpp"
#include "recmeta/text.hpp"
#include "recmeta/version.hpp"

namespace recmeta {

using nlohmann::json;

namespace {

json combo_to_json(const ComboSpec& combo) {
    json j;
    j["algorithm"] = algorithm_name(combo.id.algorithm);
    j["config_index"] = combo.id.config_index;
    switch (combo.id.algorithm) {
        case Algorithm::Random:
        case Algorithm::Popularity:
            break;
        case Algorithm::UserKNN:
        case Algorithm::ItemKNN:
            j["neighbors"] = combo.params.neighbors;
            break;
        case Algorithm::ImplicitALS:
            j["factors"] = combo.params.factors;
            j["regularization"] = combo.params.regularization;
            j["epochs"] = combo.params.epochs;
            j["alpha"] = combo.params.alpha;
            break;
        case Algorithm::EASE:
            j["ridge"] = combo.params.ridge;
            break;
    }
    return j;
}

ComboSpec combo_from_json(const json& j) {
    ComboSpec combo;
    combo.id.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
    combo.id.config_index = j.at("config_index").get<int>();
    switch (combo.id.algorithm) {
        case Algorithm::Random:
        case Algorithm::Popularity:
            break;
        case Algorithm::UserKNN:
        case Algorithm::ItemKNN:
            combo.params.neighbors = j.at("neighbors").get<int>();
            break;
        case Algorithm::ImplicitALS:
            combo.params.factors = j.at("factors").get<int>();
            combo.params.regularization = j.at("regularization").get<double>();
            combo.params.epochs = j.at("epochs").get<int>();
            combo.params.alpha = j.value("alpha", 40.0);
            break;
        case Algorithm::EASE:
            combo.params.ridge = j.at("ridge").get<double>();
            break;
    }
    return combo;
}

std::size_t threshold_slot(int k) {
    for (std::size_t s = 0; s < kThresholds.size(); ++s)
        if (kThresholds[s] == k) return s;
    throw SchemaMismatchError("unsupported threshold: " + std::to_string(k));
}

std::size_t metric_slot(Metric m) { return static_cast<std::size_t>(m); }

}  // namespace

PerformanceTable::PerformanceTable(std::vector<std::string> datasets, std::vector<ComboSpec> combos,
                                   std::uint64_t seed, double budget_seconds)
    : datasets_(std::move(datasets)),
      combos_(std::move(combos)),
      seed_(seed),
      budget_seconds_(budget_seconds) {
    scores_.assign(datasets_.size() * combos_.size() * kAllMetrics.size() * kThresholds.size() * 5,
                   -1.0);
    meta_features_.resize(datasets_.size());
}

std::size_t PerformanceTable::index(std::size_t d, std::size_t c, Metric m, int k, int fold) const {
    std::size_t idx = d;
    idx = idx * combos_.size() + c;
    idx = idx * kAllMetrics.size() + metric_slot(m);
    idx = idx * kThresholds.size() + threshold_slot(k);
    idx = idx * 5 + static_cast<std::size_t>(fold);
    return idx;
}

std::size_t PerformanceTable::dataset_index(const std::string& name) const {
    auto it = std::find(datasets_.begin(), datasets_.end(), name);
    if (it == datasets_.end()) throw SchemaMismatchError("unknown dataset: " + name);
    return static_cast<std::size_t>(it - datasets_.begin());
}

std::uint64_t fit_seed(std::uint64_t root_seed, const std::string& dataset_name,
                       const std::string& combo_name, int fold) {
    return derive_seed(root_seed, "fit", hash_str(dataset_name), hash_str(combo_name),
                       static_cast<std::uint64_t>(fold));
}

void parallel_for_jobs(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

PerformanceTable build_performance_table(const std::vector<NamedDataset>& corpus,
                                         const std::vector<ComboSpec>& zoo,
                                         const BuildOptions& options) {
    {
        std::vector<std::string> names;
        for (const NamedDataset& nd : corpus) names.push_back(nd.name);
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end())
            throw ConfigError("corpus names must be unique");
    }

    // prune, keep survivors in corpus order
    struct Prepared {
        std::string name;
        InteractionDataset dataset;
        CvPlan plan;
    };
    std::vector<Prepared> prepared;
    std::vector<std::string> excluded;
    for (const NamedDataset& nd : corpus) {
        InteractionDataset pruned = k_core_prune(nd.dataset, options.core_k);
        if (pruned.n_interactions() < options.min_pruned_interactions) {
            excluded.push_back(nd.name);
            continue;
        }
        CvPlan plan = make_cv_plan(pruned, 5, derive_seed(options.seed, "cv", hash_str(nd.name)));
        prepared.push_back(Prepared{nd.name, std::move(pruned), std::move(plan)});
    }

    std::vector<std::string> names;
    for (const Prepared& p : prepared) names.push_back(p.name);
    PerformanceTable table(names, zoo, options.seed, options.budget_seconds);
    table.set_excluded_datasets(excluded);
    for (std::size_t d = 0; d < prepared.size(); ++d)
        table.set_meta_features(d, extract_meta_features(prepared[d].dataset));

    // one job per (dataset, combo, fold); each writes into its own cells
    struct Job {
        std::size_t d, c;
        int fold;
    };
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < prepared.size(); ++d)
        for (std::size_t c = 0; c < zoo.size(); ++c)
            for (int f = 0; f < 5; ++f) jobs.push_back(Job{d, c, f});

    parallel_for_jobs(jobs.size(), options.jobs, [&](std::size_t idx) {
        const Job& job = jobs[idx];
        const Prepared& p = prepared[job.d];
        const ComboSpec& combo = zoo[job.c];
        const FoldSplit& split = p.plan.folds[job.fold];
        TrainMatrix train = TrainMatrix::from_interactions(
            split.train, static_cast<std::uint32_t>(p.dataset.n_users()),
            static_cast<std::uint32_t>(p.dataset.n_items()));
        auto model = fit(combo, train, options.budget_seconds,
                         fit_seed(options.seed, p.name, combo.name(), job.fold));
        model->set_provenance(p.name, job.fold);
        std::vector<MetricResult> results = evaluate_fold(*model, split);
        for (const MetricResult& r : results)
            table.set_score(job.d, job.c, r.metric, r.k, job.fold, r.value);
    });

    return table;
}

GroundTruth ground_truth(const PerformanceTable& table, Metric metric, int k) {
    GroundTruth gt;
    gt.datasets = table.datasets();
    gt.combos = table.combos();
    const std::size_t n_combos = gt.combos.size();
    gt.labels.resize(gt.datasets.size());
    gt.ranking.resize(gt.datasets.size());
    for (std::size_t d = 0; d < gt.datasets.size(); ++d) {
        std::vector<double>& labels = gt.labels[d];
        labels.resize(n_combos);
        for (std::size_t c = 0; c < n_combos; ++c) {
            // sorted accumulation keeps the mean invariant to fold order
            std::array<double, 5> folds;
            for (int f = 0; f < 5; ++f) folds[f] = table.score(d, c, metric, k, f);
            std::sort(folds.begin(), folds.end());
            double sum = 0.0;
            for (double v : folds) sum += v;
            labels[c] = sum / 5.0;
        }
        // sort combo indices by (label desc, combo id asc), then invert
        std::vector<std::size_t> order(n_combos);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (labels[a] != labels[b]) return labels[a] > labels[b];
            return a < b;
        });
        gt.ranking[d].assign(n_combos, 0);
        for (std::size_t pos = 0; pos < n_combos; ++pos)
            gt.ranking[d][order[pos]] = static_cast<int>(pos) + 1;
    }
    return gt;
}

void save_table(const PerformanceTable& table, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::string perf = "dataset,combo,metric,k,fold,score\n";
    for (std::size_t d = 0; d < table.datasets().size(); ++d)
        for (std::size_t c = 0; c < table.combos().size(); ++c)
            for (Metric m : kAllMetrics)
                for (int k : kThresholds)
                    for (int f = 0; f < 5; ++f) {
                        perf += table.datasets()[d] + "," + table.combos()[c].name() + "," +
                                metric_name(m) + "," + std::to_string(k) + "," + std::to_string(f) +
                                "," + fmt_g12(table.score(d, c, m, k, f)) + "\n";
                    }
    write_file(dir / "performance.csv", perf);

    std::string mf = meta_feature_csv_header();
    for (std::size_t d = 0; d < table.datasets().size(); ++d)
        mf += meta_feature_csv_row(table.datasets()[d], table.meta_features(d));
    write_file(dir / "meta_features.csv", mf);

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["seed"] = table.seed();
    manifest["budget_seconds"] = table.budget_seconds();
    manifest["datasets"] = table.datasets();
    manifest["excluded_datasets"] = table.excluded_datasets();
    json zoo = json::array();
    for (const ComboSpec& combo : table.combos()) zoo.push_back(combo_to_json(combo));
    manifest["zoo"] = zoo;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

PerformanceTable load_table(const std::filesystem::path& dir) {
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw SchemaMismatchError("manifest.json: " + std::string(e.what()));
    }

    std::vector<ComboSpec> combos;
    for (const json& j : manifest.at("zoo")) combos.push_back(combo_from_json(j));
    std::vector<std::string> datasets = manifest.at("datasets").get<std::vector<std::string>>();

    PerformanceTable table(datasets, combos, manifest.at("seed").get<std::uint64_t>(),
                           manifest.at("budget_seconds").get<double>());
    table.set_excluded_datasets(
        manifest.value("excluded_datasets", std::vector<std::string>{}));

    std::vector<std::string> lines = read_lines(dir / "performance.csv");
    if (lines.empty() || lines[0] != "dataset,combo,metric,k,fold,score")
        throw SchemaMismatchError("performance.csv: bad header");

    std::vector<std::string> combo_names;
    for (const ComboSpec& c : combos) combo_names.push_back(c.name());

    std::vector<char> filled(datasets.size() * combos.size() * kAllMetrics.size() *
                                 kThresholds.size() * 5,
                             0);
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        std::vector<std::string> f = split(lines[ln], ',');
        if (f.size() != 6) throw SchemaMismatchError("performance.csv line " + std::to_string(ln + 1));
        std::size_t d = table.dataset_index(f[0]);
        auto cit = std::find(combo_names.begin(), combo_names.end(), f[1]);
        if (cit == combo_names.end()) throw SchemaMismatchError("unknown combo: " + f[1]);
        std::size_t c = static_cast<std::size_t>(cit - combo_names.begin());
        Metric m = metric_from_name(f[2]);
        auto k = parse_int(f[3]);
        auto fold = parse_int(f[4]);
        auto score = parse_double(f[5]);
        if (!k || !fold || !score || *fold < 0 || *fold >= 5)
            throw SchemaMismatchError("performance.csv line " + std::to_string(ln + 1));
        if (*score < 0.0 || *score > 1.0)
            throw SchemaMismatchError("score out of range: " + f[5]);
        std::size_t cell = d;
        cell = cell * combos.size() + c;
        cell = cell * kAllMetrics.size() + static_cast<std::size_t>(m);
        cell = cell * kThresholds.size() + threshold_slot(static_cast<int>(*k));
        cell = cell * 5 + static_cast<std::size_t>(*fold);
        if (filled[cell]) throw SchemaMismatchError("duplicate cell at line " + std::to_string(ln + 1));
        filled[cell] = 1;
        table.set_score(d, c, m, static_cast<int>(*k), static_cast<int>(*fold), *score);
    }
    if (std::find(filled.begin(), filled.end(), 0) != filled.end())
        throw IncompleteGridError("performance.csv does not cover the full grid");

    // meta-features
    std::vector<std::string> mf_lines = read_lines(dir / "meta_features.csv");
    if (mf_lines.empty() || mf_lines[0] + "\n" != meta_feature_csv_header())
        throw SchemaMismatchError("meta_features.csv: bad header");
    std::vector<char> mf_filled(datasets.size(), 0);
    for (std::size_t ln = 1; ln < mf_lines.size(); ++ln) {
        std::vector<std::string> f = split(mf_lines[ln], ',');
        if (f.size() != 1 + kNumMetaFeatures)
            throw SchemaMismatchError("meta_features.csv line " + std::to_string(ln + 1));
        std::size_t d = table.dataset_index(f[0]);
        std::array<double, kNumMetaFeatures> values{};
        for (std::size_t i = 0; i < kNumMetaFeatures; ++i) {
            auto v = parse_double(f[1 + i]);
            if (!v) throw SchemaMismatchError("meta_features.csv line " + std::to_string(ln + 1));
            values[i] = *v;
        }
        table.set_meta_features(d, MetaFeatureVector::from_values(values));
        mf_filled[d] = 1;
    }
    if (std::find(mf_filled.begin(), mf_filled.end(), 0) != mf_filled.end())
        throw IncompleteGridError("meta_features.csv does not cover all datasets");

    return table;
}

}  // namespace recmeta
