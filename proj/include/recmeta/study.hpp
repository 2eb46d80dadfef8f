#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recmeta/algorithms.hpp"
#include "recmeta/interactions.hpp"
#include "recmeta/regressors.hpp"
#include "recmeta/selector_eval.hpp"
#include "recmeta/synth.hpp"

namespace recmeta {

struct CorpusEntry {
    std::string name;
    std::filesystem::path path;
    CsvSchema schema;
};

// One declarative file describes a whole study; all randomness flows from the
// root seed. n_folds and the metric thresholds are fixed by the pipeline and
// only validated here.
struct StudyConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    int core_k = 5;
    double fit_budget_seconds = 60.0;
    std::vector<CorpusEntry> corpus;
    std::vector<RegressorFamily> learners;
    std::vector<Objective> objectives;
    std::optional<std::vector<ComboSpec>> zoo_override;
    std::vector<std::pair<RegressorFamily, std::vector<RegressorSpec>>> grids;
    SynthParams synth;

    const std::vector<RegressorSpec>& grid_for(RegressorFamily family) const;
    std::vector<ComboSpec> zoo() const;
};

StudyConfig load_config(const std::filesystem::path& path);

struct StageOptions {
    int jobs = 1;
    std::optional<std::uint64_t> seed_override;
    std::optional<double> budget_override;
    bool filter_significant = false;
};

// Pipeline stages. Each communicates with the next only through files under
// output_dir and is idempotent for a fixed config and seed.
void run_synth(const StudyConfig& config, const StageOptions& options);
void run_prepare(const StudyConfig& config, const StageOptions& options);
void run_build_meta(const StudyConfig& config, const StageOptions& options);
void run_select(const StudyConfig& config, const StageOptions& options);
void run_report(const StudyConfig& config, const StageOptions& options);

}  // namespace recmeta
