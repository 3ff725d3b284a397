#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mealmeter/features.hpp"

namespace mealmeter {

// ---- train/test split --------------------------------------------------------

/// Seeded Fisher-Yates permutation of [0, n); first ceil(ratio*n) indices are
/// the training rows. Deterministic for a given (n, seed) on any platform.
struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

SplitIndices split_indices(int n_rows, double ratio, uint64_t seed);

std::pair<FeatureMatrix, FeatureMatrix> split_train_test(const FeatureMatrix& rows, double ratio,
                                                         uint64_t seed);

// ---- stages --------------------------------------------------------------------

struct Standardizer {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma; // population SD; 0 marks a constant column
    std::vector<int> constant_columns;
};

Standardizer fit_standardizer(const Eigen::MatrixXd& train);

/// (x - mu) / sigma columnwise; constant columns map to 0.
Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& rows);

struct PcaLoadings {
    Eigen::MatrixXd W;                  // p x K, orthonormal columns
    Eigen::VectorXd explained_variance; // singular_value^2 / (n-1), non-increasing
};

/// Top-K right singular vectors of the standardized training matrix. Each
/// loading column is sign-fixed so its largest-magnitude entry is positive.
PcaLoadings fit_pca(const Eigen::MatrixXd& x_scaled, int components);

Eigen::MatrixXd pca_transform(const PcaLoadings& pca, const Eigen::MatrixXd& x_scaled);

struct LinearModel {
    double intercept = 0.0;
    Eigen::VectorXd coef;
};

/// Least squares on [1 | Z] via a rank-revealing orthogonal decomposition;
/// rank-deficient designs get the minimum-norm solution.
LinearModel fit_regression(const Eigen::MatrixXd& scores, const Eigen::VectorXd& y);

// ---- fitted pipeline --------------------------------------------------------------

struct PipelineSchema {
    std::vector<SignalName> signals;
    std::vector<std::string> columns;
    std::vector<int> column_signal;
    int entropy_bins = kDefaultEntropyBins;
    double resample_hz = 8.0;
    double horizon_min = 90.0;
    int smooth_window = 20;
    bool smooth_all = false;
};

struct FittedPipeline {
    PipelineSchema schema;
    Standardizer standardizer;
    PcaLoadings pca;
    std::array<LinearModel, kTargetCount> models; // Target order
    uint64_t split_seed = 0;
    double split_ratio = 0.8;
    std::string scope;     // "pooled" | "per-subject"
    std::string scope_key; // "pooled" or the subject id
    std::map<std::string, std::string> config_echo;
};

FittedPipeline fit_pipeline(const FeatureMatrix& train, int components, uint64_t split_seed,
                            double split_ratio, const std::string& scope, const std::string& scope_key);

struct Predictions {
    Eigen::MatrixXd raw;       // n x 3, pre-clamp estimates
    Eigen::MatrixXd estimates; // n x 3, clamped at 0 g
    std::vector<std::array<bool, kTargetCount>> clamped;
};

Predictions predict(const FittedPipeline& p, const FeatureMatrix& rows);

/// Standardized design of `rows` under the pipeline's standardizer (the

/// per-feature view the contribution identity is stated in).
Eigen::MatrixXd standardized_rows(const FittedPipeline& p, const FeatureMatrix& rows);

// ---- persistence --------------------------------------------------------------------

/// Versioned self-describing JSON artifact; round-trips every coefficient
/// bit-exactly.
void save_pipeline(const FittedPipeline& p, const std::filesystem::path& path);
FittedPipeline load_pipeline(const std::filesystem::path& path);

} // namespace mealmeter
