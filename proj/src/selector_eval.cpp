#include "recmeta/selector_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "recmeta/rng.hpp"
#include "recmeta/text.hpp"

namespace recmeta {

using nlohmann::json;

const char* objective_name(Objective o) {
    return o == Objective::PerformancePrediction ? "performance" : "ranking";
}

Objective objective_from_name(const std::string& name) {
    if (name == "performance") return Objective::PerformancePrediction;
    if (name == "ranking") return Objective::RankingPrediction;
    throw ConfigError("unknown objective: " + name);
}

namespace {

// 1-based fractional ranks; ties share the mean of their rank positions
std::vector<double> average_ranks(std::span<const double> v, bool descending) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return descending ? v[a] > v[b] : v[a] < v[b];
        return a < b;
    });
    std::vector<double> ranks(n);
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos;
        while (end + 1 < n && v[order[end + 1]] == v[order[pos]]) ++end;
        const double mean_rank = 0.5 * (static_cast<double>(pos) + static_cast<double>(end)) + 1.0;
        for (std::size_t p = pos; p <= end; ++p) ranks[order[p]] = mean_rank;
        pos = end + 1;
    }
    return ranks;
}

bool is_constant(std::span<const double> v) {
    for (double x : v)
        if (x != v[0]) return false;
    return true;
}

double t_test_p_value(double rho, std::size_t n) {
    if (std::abs(rho) >= 1.0) return 0.0;
    const double dof = static_cast<double>(n - 2);
    const double t = rho * std::sqrt(dof / ((1.0 - rho) * (1.0 + rho)));
    boost::math::students_t_distribution<double> dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

SpearmanResult spearman(std::span<const double> a, VectorKind kind_a, std::span<const double> b,
                        VectorKind kind_b) {
    if (a.size() != b.size()) throw LengthMismatchError("spearman: vector lengths differ");
    if (a.size() < 3) throw LengthMismatchError("spearman: need at least 3 entries");
    if (is_constant(a) || is_constant(b)) return {0.0, 1.0};

    std::vector<double> ra = average_ranks(a, kind_a == VectorKind::Scores);
    std::vector<double> rb = average_ranks(b, kind_b == VectorKind::Scores);
    const std::size_t n = ra.size();

    // exact agreement / reversal short-circuits keep rho at exactly +/-1
    bool identical = true, reversed = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (ra[i] != rb[i]) identical = false;
        if (ra[i] + rb[i] != static_cast<double>(n) + 1.0) reversed = false;
    }
    if (identical) return {1.0, t_test_p_value(1.0, n)};
    if (reversed) return {-1.0, t_test_p_value(-1.0, n)};

    const double mean = 0.5 * (static_cast<double>(n) + 1.0);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    double rho = num / std::sqrt(da * db);
    rho = std::clamp(rho, -1.0, 1.0);
    return {rho, t_test_p_value(rho, n)};
}

SpearmanResult spearman(std::span<const double> a, std::span<const double> b) {
    return spearman(a, VectorKind::Scores, b, VectorKind::Scores);
}

double selection_recall(std::span<const int> predicted_ranking, std::span<const int> true_ranking,
                        int n) {
    if (predicted_ranking.size() != true_ranking.size())
        throw MalformedRankingError("rankings differ in length");
    const std::size_t m = predicted_ranking.size();
    if (n < 1 || static_cast<std::size_t>(n) > m)
        throw MalformedRankingError("recall cutoff out of range");
    auto check_permutation = [m](std::span<const int> r) {
        std::vector<char> seen(m, 0);
        for (int rank : r) {
            if (rank < 1 || static_cast<std::size_t>(rank) > m || seen[rank - 1])
                throw MalformedRankingError("ranking is not a permutation of 1..n");
            seen[rank - 1] = 1;
        }
    };
    check_permutation(predicted_ranking);
    check_permutation(true_ranking);

    std::size_t overlap = 0;
    for (std::size_t c = 0; c < m; ++c)
        if (predicted_ranking[c] <= n && true_ranking[c] <= n) ++overlap;
    return static_cast<double>(overlap) / static_cast<double>(n);
}

std::vector<std::vector<double>> make_labels(const GroundTruth& gt, Objective objective) {
    std::vector<std::vector<double>> labels(gt.datasets.size());
    for (std::size_t d = 0; d < gt.datasets.size(); ++d) {
        if (objective == Objective::PerformancePrediction) {
            labels[d] = gt.labels[d];
        } else {
            labels[d].resize(gt.combos.size());
            for (std::size_t c = 0; c < gt.combos.size(); ++c)
                labels[d][c] = static_cast<double>(gt.ranking[d][c]);
        }
    }
    return labels;
}

std::vector<int> rank_by_objective(std::span<const double> values, Objective objective) {
    const std::size_t m = values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b])
            return objective == Objective::PerformancePrediction ? values[a] > values[b]
                                                                 : values[a] < values[b];
        return a < b;
    });
    std::vector<int> ranking(m);
    for (std::size_t pos = 0; pos < m; ++pos) ranking[order[pos]] = static_cast<int>(pos) + 1;
    return ranking;
}

std::vector<LooRecord> loo_evaluate(const PerformanceTable& table, RegressorFamily family,
                                    const std::vector<RegressorSpec>& grid, Objective objective,
                                    const LooOptions& options) {
    const std::size_t n_datasets = table.datasets().size();
    if (n_datasets < 3) throw TooFewDatasetsError("leave-one-out needs at least 3 datasets");
    if (grid.empty()) throw EmptyGridError("loo_evaluate needs a non-empty grid");
    for (const RegressorSpec& spec : grid)
        if (spec.family != family) throw ConfigError("grid entry family mismatch");

    const GroundTruth gt = ground_truth(table, options.metric, options.metric_k);
    const std::vector<std::vector<double>> labels = make_labels(gt, objective);
    const std::size_t n_combos = table.combos().size();

    std::vector<LooRecord> records(n_datasets);
    parallel_for_jobs(n_datasets, options.jobs, [&](std::size_t d) {
        std::vector<MetaFeatureVector> train_features;
        train_features.reserve(n_datasets - 1);
        std::vector<std::size_t> train_rows;
        for (std::size_t other = 0; other < n_datasets; ++other) {
            if (other == d) continue;
            train_features.push_back(table.meta_features(other));
            train_rows.push_back(other);
        }

        LooRecord record;
        record.dataset = table.datasets()[d];
        record.learner = family;
        record.objective = objective;
        record.predicted_values.resize(n_combos);

        std::vector<double> y(train_rows.size());
        for (std::size_t c = 0; c < n_combos; ++c) {
            for (std::size_t r = 0; r < train_rows.size(); ++r) y[r] = labels[train_rows[r]][c];
            const std::uint64_t seed =
                derive_seed(options.seed, "loo", hash_str(record.dataset), c,
                            static_cast<std::uint64_t>(objective));
            RegressorSpec spec = grid_search(grid, train_features, y, options.inner_folds, seed);
            TrainedRegressor model = fit_regressor(spec, train_features, y);
            record.predicted_values[c] = predict(model, table.meta_features(d));
        }

        record.predicted_ranking = rank_predictions(record.predicted_values, objective);
        record.true_ranking = gt.ranking[d];
        if (is_constant(record.predicted_values)) {
            // ties alone carry no ordering information
            record.rho = 0.0;
            record.p = 1.0;
        } else if (n_combos < 3) {
            // two-element rankings are either identical or reversed
            record.rho = record.predicted_ranking == gt.ranking[d] ? 1.0 : -1.0;
            record.p = 1.0;
        } else {
            std::vector<double> pred_rank_values(n_combos), true_rank_values(n_combos);
            for (std::size_t c = 0; c < n_combos; ++c) {
                pred_rank_values[c] = static_cast<double>(record.predicted_ranking[c]);
                true_rank_values[c] = static_cast<double>(gt.ranking[d][c]);
            }
            SpearmanResult sr = spearman(pred_rank_values, VectorKind::Ranking, true_rank_values,
                                         VectorKind::Ranking);
            record.rho = sr.rho;
            record.p = sr.p;
        }
        record.recall1 = selection_recall(record.predicted_ranking, gt.ranking[d], 1);
        record.recall3 = selection_recall(record.predicted_ranking, gt.ranking[d],
                                          std::min<int>(3, static_cast<int>(n_combos)));
        records[d] = std::move(record);
    });
    return records;
}

namespace {

double lower_median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

std::vector<RecallLevel> distribution(const std::vector<double>& values,
                                      const std::vector<double>& levels) {
    std::vector<RecallLevel> out;
    for (double level : levels) {
        int count = 0;
        for (double v : values)
            if (std::abs(v - level) < 1e-9) ++count;
        out.push_back(RecallLevel{level, count});
    }
    return out;
}

}  // namespace

LooReport aggregate(const std::vector<ComboSpec>& combos, std::vector<LooRecord> records) {
    LooReport report;
    report.combos = combos;
    report.records = std::move(records);

    // group keys in first-appearance order
    std::vector<std::pair<RegressorFamily, Objective>> keys;
    for (const LooRecord& r : report.records) {
        std::pair<RegressorFamily, Objective> key{r.learner, r.objective};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }

    auto median_rho_of = [&](RegressorFamily learner, Objective objective,
                             bool& found) -> double {
        std::vector<double> rhos;
        for (const LooRecord& r : report.records)
            if (r.learner == learner && r.objective == objective) rhos.push_back(r.rho);
        found = !rhos.empty();
        return found ? lower_median(std::move(rhos)) : 0.0;
    };

    for (auto [learner, objective] : keys) {
        std::vector<double> rhos, r1, r3;
        for (const LooRecord& r : report.records) {
            if (r.learner != learner || r.objective != objective) continue;
            rhos.push_back(r.rho);
            r1.push_back(r.recall1);
            r3.push_back(r.recall3);
        }
        AggregateRow row;
        row.learner = learner;
        row.objective = objective;
        row.median_rho = lower_median(rhos);
        row.mean_recall1 = std::accumulate(r1.begin(), r1.end(), 0.0) / static_cast<double>(r1.size());
        row.mean_recall3 = std::accumulate(r3.begin(), r3.end(), 0.0) / static_cast<double>(r3.size());
        bool have_perf = false;
        const double perf_median =
            median_rho_of(learner, Objective::PerformancePrediction, have_perf);
        row.rho_delta_vs_performance = have_perf ? row.median_rho - perf_median : 0.0;
        row.recall1_distribution = distribution(r1, {0.0, 1.0});
        row.recall3_distribution = distribution(r3, {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0});
        report.aggregates.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string ranking_to_string(const std::vector<int>& ranking, const std::vector<ComboSpec>& combos) {
    // combo names best-first, joined by '|'
    std::vector<std::size_t> order(ranking.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ranking[a] < ranking[b]; });
    std::string out;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (pos > 0) out += '|';
        out += combos[order[pos]].name();
    }
    return out;
}

}  // namespace

void emit_report(const LooReport& report, const std::filesystem::path& dir, ReportFormat format) {
    std::filesystem::create_directories(dir);

    if (format == ReportFormat::Csv) {
        std::string records =
            "dataset,learner,objective,rho,p,recall1,recall3,predicted_ranking,true_ranking\n";
        for (const LooRecord& r : report.records) {
            records += r.dataset;
            records += ',';
            records += family_name(r.learner);
            records += ',';
            records += objective_name(r.objective);
            records += ',';
            records += fmt_g12(round_g12(r.rho));
            records += ',';
            records += fmt_g12(round_g12(r.p));
            records += ',';
            records += fmt_g12(round_g12(r.recall1));
            records += ',';
            records += fmt_g12(round_g12(r.recall3));
            records += ',';
            records += ranking_to_string(r.predicted_ranking, report.combos);
            records += ',';
            records += ranking_to_string(r.true_ranking, report.combos);
            records += '\n';
        }
        write_file(dir / "records.csv", records);

        std::string aggregates =
            "learner,objective,median_rho,mean_recall1,mean_recall3,rho_delta_vs_performance\n";
        for (const AggregateRow& row : report.aggregates) {
            aggregates += family_name(row.learner);
            aggregates += ',';
            aggregates += objective_name(row.objective);
            aggregates += ',';
            aggregates += fmt_g12(round_g12(row.median_rho));
            aggregates += ',';
            aggregates += fmt_g12(round_g12(row.mean_recall1));
            aggregates += ',';
            aggregates += fmt_g12(round_g12(row.mean_recall3));
            aggregates += ',';
            aggregates += fmt_g12(round_g12(row.rho_delta_vs_performance));
            aggregates += '\n';
        }
        write_file(dir / "aggregates.csv", aggregates);

        std::string dist = "learner,objective,metric,value,count\n";
        for (const AggregateRow& row : report.aggregates) {
            auto emit_levels = [&](const char* metric, const std::vector<RecallLevel>& levels) {
                for (const RecallLevel& level : levels) {
                    dist += family_name(row.learner);
                    dist += ',';
                    dist += objective_name(row.objective);
                    dist += ',';
                    dist += metric;
                    dist += ',';
                    dist += fmt_g12(round_g12(level.value));
                    dist += ',';
                    dist += std::to_string(level.count);
                    dist += '\n';
                }
            };
            emit_levels("recall1", row.recall1_distribution);
            emit_levels("recall3", row.recall3_distribution);
        }
        write_file(dir / "recall_distributions.csv", dist);
        return;
    }

    json doc;
    json records = json::array();
    for (const LooRecord& r : report.records) {
        json jr;
        jr["dataset"] = r.dataset;
        jr["learner"] = family_name(r.learner);
        jr["objective"] = objective_name(r.objective);
        jr["rho"] = round_g12(r.rho);
        jr["p"] = round_g12(r.p);
        jr["recall1"] = round_g12(r.recall1);
        jr["recall3"] = round_g12(r.recall3);
        jr["predicted_ranking"] = ranking_to_string(r.predicted_ranking, report.combos);
        jr["true_ranking"] = ranking_to_string(r.true_ranking, report.combos);
        records.push_back(std::move(jr));
    }
    doc["records"] = std::move(records);

    json aggregates = json::array();
    for (const AggregateRow& row : report.aggregates) {
        json ja;
        ja["learner"] = family_name(row.learner);
        ja["objective"] = objective_name(row.objective);
        ja["median_rho"] = round_g12(row.median_rho);
        ja["mean_recall1"] = round_g12(row.mean_recall1);
        ja["mean_recall3"] = round_g12(row.mean_recall3);
        ja["rho_delta_vs_performance"] = round_g12(row.rho_delta_vs_performance);
        auto levels_json = [](const std::vector<RecallLevel>& levels) {
            json out = json::array();
            for (const RecallLevel& level : levels)
                out.push_back({{"value", round_g12(level.value)}, {"count", level.count}});
            return out;
        };
        ja["recall1_distribution"] = levels_json(row.recall1_distribution);
        ja["recall3_distribution"] = levels_json(row.recall3_distribution);
        aggregates.push_back(std::move(ja));
    }
    doc["aggregates"] = std::move(aggregates);
    write_file(dir / "report.json", doc.dump(2) + "\n");
}

}  // namespace recmeta
