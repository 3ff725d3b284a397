#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mealmeter/baseline_huo.hpp"
#include "mealmeter/report.hpp"
#include "mealmeter/run_config.hpp"

namespace mealmeter {

/// Stage progress/warning sink (defaults to stderr).
using StageLog = std::function<void(const std::string& stage, const std::string& message)>;

StageLog stderr_log();

struct Dataset {
    std::vector<SubjectRecord> records; // sorted by (subject, day)
    int n_meals = 0;
    int unassigned_meals = 0; // meals no recording covers
};

/// Load `<data_dir>/<subject>/<day>/<CHANNEL>.csv` trees plus `meals.csv`,
/// restricted to the channels the configured signal set needs.
Dataset load_dataset(const std::filesystem::path& data_dir, const RunConfig& cfg,
                     const StageLog& log = stderr_log());

struct WindowSet {
    std::vector<MealWindow> windows;
    int skipped = 0;                        // incl. meals outside every recording
    std::map<std::string, int> skipped_by_subject;
};

WindowSet extract_all_windows(const Dataset& ds, const RunConfig& cfg,
                              const StageLog& log = stderr_log());

/// Everything one evaluation run produces, computed before anything is written.
struct RunResult {
    std::vector<EvalReport> metrics;                 // metrics_<scope>.csv rows
    std::array<std::vector<ScatterPoint>, kTargetCount> scatter;
    std::vector<ContributionReport> contributions;   // mealmeter method only
    std::vector<EvalReport> comparison;              // one entry per method (pooled rollup)
    std::vector<FittedPipeline> pipelines;           // mealmeter fits, one per scope key
    int n_windows = 0;
    int n_skipped = 0;
};

/// ingest -> preprocess -> featurize -> split -> fit -> predict -> evaluate ->
/// contributions. Pure compute; pair with write_run_outputs.
RunResult run_evaluation(const RunConfig& cfg, const StageLog& log = stderr_log());

/// Emit metrics/scatter/contribution CSVs (plus comparison when both methods
/// ran, model artifacts, and SVGs when enabled) under cfg.out_dir.
std::vector<std::filesystem::path> write_run_outputs(const RunConfig& cfg, const RunResult& result,
                                                     const StageLog& log = stderr_log());

// ---- narrower stages reused by the CLI subcommands ---------------------------

FeatureMatrix featurize_dataset(const RunConfig& cfg, const StageLog& log = stderr_log());

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

} // namespace mealmeter
